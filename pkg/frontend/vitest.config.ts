import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // every solve is a subprocess; the parity corpus runs dozens of them
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
