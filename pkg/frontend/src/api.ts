/**
 * Typed client for the psytest gateway HTTP API.
 *
 * The client is a thin wire-format mirror: it never computes or caches
 * anything score-related, because the server never sends scoring data to
 * respondents in the first place.
 */

export interface TestSummary {
    test_id: string;
    title: string;
}

export interface DemographicFieldSpec {
    name: string;
    kind: 'text' | 'integer' | 'choice';
    choices?: string[];
}

export interface TestDetail {
    test_id: string;
    title: string;
    instruction: string;
    answer_options: string[];
    demographics: DemographicFieldSpec[];
    items: Array<{ ordinal: number; text: string }>;
    total: number;
}

export interface ItemPayload {
    ordinal: number;
    total: number;
    text: string;
    options: string[];
}

export type CurrentPayload = { done: true } | ItemPayload;

export function isDone(payload: CurrentPayload): payload is { done: true } {
    return 'done' in payload && payload.done === true;
}

export interface CategoryResultPayload {
    category_id: string;
    category_name: string;
    raw_score: string;
    band_index: number;
    interpretation: string;
}

export interface SessionResultPayload {
    session_id: string;
    results: CategoryResultPayload[];
}

export type DemographicValues = Record<string, string | number>;

/** Error body the gateway returns for every failure: {code, message}. */
export class ApiError extends Error {
    constructor(
        readonly status: number,
        readonly code: string,
        message: string,
    ) {
        super(message);
        this.name = 'ApiError';
    }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
    constructor(
        private readonly baseUrl: string,
        private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const response = await this.fetchImpl(this.baseUrl + path, init);
        if (!response.ok) {
            let code = 'HTTP_ERROR';
            let message = `${response.status} ${response.statusText}`;
            try {
                const body = (await response.json()) as { code?: string; message?: string };
                if (body.code) code = body.code;
                if (body.message) message = body.message;
            } catch {
                // non-JSON error body; keep the status line
            }
            throw new ApiError(response.status, code, message);
        }
        return (await response.json()) as T;
    }

    listTests(): Promise<TestSummary[]> {
        return this.request<TestSummary[]>('/tests');
    }

    getTest(testId: string): Promise<TestDetail> {
        return this.request<TestDetail>(`/tests/${encodeURIComponent(testId)}`);
    }

    async createSession(testId: string, demographics: DemographicValues): Promise<string> {
        const body = await this.request<{ session_id: string }>('/sessions', {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify({ test_id: testId, demographics }),
        });
        return body.session_id;
    }

    currentItem(sessionId: string): Promise<CurrentPayload> {
        return this.request<CurrentPayload>(`/sessions/${encodeURIComponent(sessionId)}/current`);
    }

    /**
     * Record an answer. The ordinal echo lets the server refuse a stale or
     * duplicated submission instead of filing it against the wrong item.
     */
    submitAnswer(sessionId: string, answerIndex: number, ordinal?: number): Promise<CurrentPayload> {
        return this.request<CurrentPayload>(`/sessions/${encodeURIComponent(sessionId)}/answer`, {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify(
                ordinal === undefined
                    ? { answer_index: answerIndex }
                    : { answer_index: answerIndex, ordinal },
            ),
        });
    }

    /** Throws ApiError(404, RESULTS_UNAVAILABLE) when withheld or incomplete. */
    result(sessionId: string): Promise<SessionResultPayload> {
        return this.request<SessionResultPayload>(`/sessions/${encodeURIComponent(sessionId)}/result`);
    }
}
