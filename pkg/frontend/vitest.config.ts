import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // trainer tests run full 200-epoch fits on the 500-node benchmark graph
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
