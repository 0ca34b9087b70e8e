// Typed client for the ranking service HTTP API. All calls are same-origin:
// the built bundle is meant to be served by the ranking server itself.

export interface QueryResult {
  rank: number;
  image_id: string;
  category: number | string | null;
  value: number;
  similarity: number;
  upper: number | null;
  lower: number | null;
  classes: number;
  budget_exceeded: boolean;
}

export interface QueryResponse {
  api_version: string;
  query_id: string;
  measure: string;
  epsilon: number;
  epsilon_prime: number;
  spread: number | null;
  elapsed_ms: number;
  budget_exceeded: boolean;
  results: QueryResult[];
}

export interface ConfigResponse {
  api_version: string;
  fingerprint: string;
  measures: string[];
  defaults: {
    measure: string;
    epsilon: number;
    epsilon_prime: number;
    k: number;
    envelope: string;
    spread: number | null;
  };
  dataset: {
    images: number;
    blocks: number;
    categories: Record<string, number>;
    image_ids: string[];
  };
}

export interface QueryParams {
  measure: string;
  epsilon: number;
  epsilonPrime: number;
  spread: number | null;
  k: number;
}

export type QuerySource =
  | { kind: "indexed"; imageId: string }
  | { kind: "upload"; file: File };

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.code = code;
    this.status = status;
  }
}

async function raiseApiError(response: Response): Promise<never> {
  let code = "http_error";
  let message = `request failed with status ${response.status}`;
  try {
    const body = await response.json();
    if (body && body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(code, message, response.status);
}

export async function fetchConfig(): Promise<ConfigResponse> {
  const response = await fetch("/api/config");
  if (!response.ok) {
    await raiseApiError(response);
  }
  return (await response.json()) as ConfigResponse;
}

// Shared field payload for both transport encodings.
export function queryFields(params: QueryParams): Record<string, string> {
  const fields: Record<string, string> = {
    measure: params.measure,
    epsilon: String(params.epsilon),
    epsilon_prime: String(params.epsilonPrime),
    k: String(params.k),
  };
  if (params.spread !== null) {
    fields.spread = String(params.spread);
  }
  return fields;
}

export async function postQuery(
  source: QuerySource,
  params: QueryParams,
): Promise<QueryResponse> {
  let response: Response;
  if (source.kind === "indexed") {
    const body: Record<string, unknown> = {
      image_id: source.imageId,
      measure: params.measure,
      epsilon: params.epsilon,
      epsilon_prime: params.epsilonPrime,
      k: params.k,
    };
    if (params.spread !== null) {
      body.spread = params.spread;
    }
    response = await fetch("/api/query", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  } else {
    const form = new FormData();
    for (const [key, value] of Object.entries(queryFields(params))) {
      form.append(key, value);
    }
    form.append("image", source.file, source.file.name);
    response = await fetch("/api/query", { method: "POST", body: form });
  }
  if (!response.ok) {
    await raiseApiError(response);
  }
  return (await response.json()) as QueryResponse;
}

export function thumbUrl(imageId: string): string {
  return `/api/image/${encodeURIComponent(imageId)}/thumb`;
}

export function imageUrl(imageId: string): string {
  return `/api/image/${encodeURIComponent(imageId)}`;
}
