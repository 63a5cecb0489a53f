import { mount } from "./main.js";

void mount().catch((error) => {
  const root = document.getElementById("app");
  if (root) {
    root.textContent = `Failed to load document: ${error instanceof Error ? error.message : String(error)}`;
  }
});
