import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    // the server round-trip test spawns a Python process
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
