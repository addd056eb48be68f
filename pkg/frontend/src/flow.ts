/**
 * Client-side session flow: a forward-only phase machine driven entirely by
 * server responses. The displayed item is always whatever the gateway says
 * is current; there is no local queue, no back button and no scoring logic.
 *
 * Phases: instruction -> demographics -> answering -> done -> results.
 * "results" is reached only when the gateway actually reveals them;
 * otherwise the flow stops at "done" with a neutral completion.
 */

import {
    ApiError,
    CurrentPayload,
    DemographicValues,
    GatewayClient,
    ItemPayload,
    SessionResultPayload,
    TestDetail,
    isDone,
} from './api.js';

export type Phase = 'instruction' | 'demographics' | 'answering' | 'done' | 'results';

const PHASE_ORDER: Record<Phase, number> = {
    instruction: 0,
    demographics: 1,
    answering: 2,
    done: 3,
    results: 4,
};

export interface PendingAnswer {
    ordinal: number;
    answerIndex: number;
}

export class SessionFlow {
    phase: Phase = 'instruction';
    test: TestDetail | null = null;
    sessionId: string | null = null;
    current: ItemPayload | null = null;
    results: SessionResultPayload | null = null;
    resultsWithheld = false;

    /** Answer that failed to send and may be retried. */
    pending: PendingAnswer | null = null;

    private busy = false;

    constructor(private readonly client: GatewayClient) {}

    get inFlight(): boolean {
        return this.busy;
    }

    private advance(next: Phase): void {
        if (PHASE_ORDER[next] < PHASE_ORDER[this.phase]) {
            throw new Error(`phase cannot go backward: ${this.phase} -> ${next}`);
        }
        this.phase = next;
    }

    async loadTest(testId: string): Promise<TestDetail> {
        this.test = await this.client.getTest(testId);
        return this.test;
    }

    beginDemographics(): void {
        if (!this.test) throw new Error('no test loaded');
        this.advance('demographics');
    }

    /** Create the server session and fetch the first item. */
    async submitDemographics(values: DemographicValues): Promise<void> {
        if (!this.test) throw new Error('no test loaded');
        this.sessionId = await this.client.createSession(this.test.test_id, values);
        this.advance('answering');
        await this.syncCurrent();
    }

    /** Re-attach to an existing session (page reload) and re-fetch current. */
    async resume(sessionId: string, testId: string): Promise<void> {
        this.test = await this.client.getTest(testId);
        this.sessionId = sessionId;
        this.advance('answering');
        await this.syncCurrent();
    }

    private applyCurrent(payload: CurrentPayload): void {
        if (isDone(payload)) {
            this.current = null;
            this.advance('done');
        } else {
            this.current = payload;
        }
    }

    async syncCurrent(): Promise<void> {
        if (!this.sessionId) throw new Error('no session');
        this.applyCurrent(await this.client.currentItem(this.sessionId));
    }

    /**
     * Send the answer for the item on screen. Re-entry while a submission
     * is in flight is ignored, so a double click cannot send twice.
     * Returns true when the answer was submitted (or had already landed).
     */
    async answer(answerIndex: number): Promise<boolean> {
        if (this.busy) return false;
        if (this.phase !== 'answering' || !this.sessionId || !this.current) {
            throw new Error('not answering');
        }
        const ordinal = this.current.ordinal;
        this.busy = true;
        try {
            const next = await this.client.submitAnswer(this.sessionId, answerIndex, ordinal);
            this.pending = null;
            this.applyCurrent(next);
            return true;
        } catch (error) {
            if (error instanceof ApiError && error.code === 'ORDINAL_MISMATCH') {
                // the answer already landed (e.g. a retried request); re-sync
                this.pending = null;
                await this.syncCurrent();
                return true;
            }
            // network failure or server error: remember what we tried
            this.pending = { ordinal, answerIndex };
            throw error;
        } finally {
            this.busy = false;
        }
    }

    /**
     * Recover after a failed submission without duplicating the answer:
     * first re-fetch the current item; only if the server still shows the
     * same ordinal is the pending answer re-sent.
     */
    async retry(): Promise<void> {
        if (!this.sessionId) throw new Error('no session');
        const pending = this.pending;
        await this.syncCurrent();
        if (!pending || this.phase !== 'answering' || !this.current) {
            this.pending = null;
            return;
        }
        if (this.current.ordinal === pending.ordinal) {
            await this.answer(pending.answerIndex);
        } else {
            this.pending = null; // it landed after all
        }
    }

    /**
     * Ask for the interpretations. Moves to "results" when the gateway
     * reveals them; marks them withheld (staying at "done") otherwise.
     */
    async fetchResults(): Promise<SessionResultPayload | null> {
        if (this.phase !== 'done' && this.phase !== 'results') {
            throw new Error('session not completed');
        }
        if (!this.sessionId) throw new Error('no session');
        try {
            this.results = await this.client.result(this.sessionId);
            this.resultsWithheld = false;
            this.advance('results');
            return this.results;
        } catch (error) {
            if (error instanceof ApiError && error.status === 404) {
                this.results = null;
                this.resultsWithheld = true;
                return null;
            }
            throw error;
        }
    }
}
