import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, name), "utf-8")) as T;
}

export interface RecordedCall {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

/** fetch stub that records requests and replies from a canned queue. */
export function recordingFetch(responses: { status?: number; body: unknown }[]) {
  const calls: RecordedCall[] = [];
  const queue = [...responses];
  const impl = async (url: string, init?: RequestInit): Promise<Response> => {
    const raw = init?.body;
    calls.push({
      url,
      method: init?.method ?? "GET",
      headers: (init?.headers as Record<string, string>) ?? {},
      body: typeof raw === "string" ? JSON.parse(raw) : raw ?? null,
    });
    const next = queue.shift() ?? { status: 200, body: {} };
    return new Response(JSON.stringify(next.body), {
      status: next.status ?? 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { impl, calls };
}
