/**
 * Debug tab model: newest-first ring buffer of debug events, capped at 500
 * with a truncation notice once older events have been dropped.
 */

import { DebugEvent } from "./model.js";

export const BUFFER_CAPACITY = 500;

export class DebugBuffer {
  private entries: DebugEvent[] = []; // newest first
  truncatedCount = 0;

  constructor(readonly capacity: number = BUFFER_CAPACITY) {}

  push(event: DebugEvent): void {
    this.entries.unshift(event);
    while (this.entries.length > this.capacity) {
      this.entries.pop();
      this.truncatedCount++;
    }
  }

  get events(): readonly DebugEvent[] {
    return this.entries;
  }

  get truncated(): boolean {
    return this.truncatedCount > 0;
  }

  get truncationNotice(): string | null {
    if (!this.truncated) return null;
    return `showing most recent ${this.capacity} events; ` +
      `${this.truncatedCount} older event(s) dropped`;
  }

  clear(): void {
    this.entries = [];
    this.truncatedCount = 0;
  }
}
