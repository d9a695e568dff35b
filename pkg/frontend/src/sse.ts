/** Incremental parser for a text/event-stream body: feed it raw chunks,
 * collect complete `data:` payloads. Comment lines (keepalives) are skipped. */
export class SseParser {
  private buffer = "";

  feed(chunk: string): string[] {
    this.buffer += chunk;
    const events: string[] = [];
    let sep: number;
    while ((sep = this.buffer.indexOf("\n\n")) !== -1) {
      const block = this.buffer.slice(0, sep);
      this.buffer = this.buffer.slice(sep + 2);
      const dataLines = block
        .split("\n")
        .filter((line) => line.startsWith("data:"))
        .map((line) => line.slice(5).trimStart());
      if (dataLines.length > 0) {
        events.push(dataLines.join("\n"));
      }
    }
    return events;
  }
}
