import type {
  ApplyResponse,
  ComparisonDoc,
  DecisionRequest,
  RunFilesResponse,
  RunState,
  RunSummary,
} from "./types.js";

/** Error carrying the HTTP status and the service's error payload. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly undecided: string[] = [],
  ) {
    super(message);
    this.name = "ApiError";
  }

  get isConflict(): boolean {
    return this.status === 409;
  }

  get isValidation(): boolean {
    return this.status === 400;
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let message = `${response.status} ${response.statusText}`;
  let undecided: string[] = [];
  try {
    const body = (await response.json()) as { error?: string; undecided?: string[] };
    if (body.error) message = body.error;
    if (Array.isArray(body.undecided)) undecided = body.undecided;
  } catch {
    // non-JSON error body: keep the status line
  }
  return new ApiError(response.status, message, undecided);
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the five review-service endpoints. */
export class ReviewApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  runUrl(runId: string): string {
    return `${this.baseUrl}/runs/${encodeURIComponent(runId)}`;
  }

  fileUrl(runId: string, path: string, suffix: string): string {
    return `${this.runUrl(runId)}/files/${encodeURIComponent(path)}/${suffix}`;
  }

  private async get<T>(url: string): Promise<T> {
    const response = await this.fetchFn(url);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(url: string, payload: unknown): Promise<T> {
    const response = await this.fetchFn(url, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  async listRuns(): Promise<RunSummary[]> {
    const payload = await this.get<{ runs: RunSummary[] }>(`${this.baseUrl}/runs`);
    return payload.runs;
  }

  listFiles(runId: string): Promise<RunFilesResponse> {
    return this.get<RunFilesResponse>(`${this.runUrl(runId)}/files`);
  }

  getComparison(runId: string, path: string): Promise<ComparisonDoc> {
    return this.get<ComparisonDoc>(this.fileUrl(runId, path, "comparison"));
  }

  submitDecision(runId: string, path: string, decision: DecisionRequest): Promise<RunState> {
    return this.post<RunState>(this.fileUrl(runId, path, "decision"), decision);
  }

  applyRun(runId: string): Promise<ApplyResponse> {
    return this.post<ApplyResponse>(`${this.runUrl(runId)}/apply`, {});
  }
}
