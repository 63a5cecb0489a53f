import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: {
        settings: {
          fetch: {
            // the e2e test talks to a live local server on an ephemeral port
            disableSameOriginPolicy: true,
          },
        },
      },
    },
    include: ["test/**/*.test.ts"],
    testTimeout: 20000,
  },
});
