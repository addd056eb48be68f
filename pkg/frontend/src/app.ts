/**
 * DOM wiring: renders the flow's phases into a root element.
 * One question per screen, no back button; every transition is a response
 * from the gateway. Reloading mid-session resumes via sessionStorage.
 */

import { DemographicFieldSpec, DemographicValues, GatewayClient, TestSummary } from './api.js';
import { SessionFlow } from './flow.js';

const SESSION_KEY = 'psytest.session';

interface StoredSession {
    sessionId: string;
    testId: string;
}

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    attrs: Record<string, string> = {},
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
    if (text !== undefined) node.textContent = text;
    return node;
}

export class App {
    private readonly flow: SessionFlow;

    constructor(
        private readonly root: HTMLElement,
        private readonly client: GatewayClient,
    ) {
        this.flow = new SessionFlow(client);
    }

    async start(): Promise<void> {
        const stored = this.storedSession();
        if (stored) {
            try {
                await this.flow.resume(stored.sessionId, stored.testId);
                this.renderAnsweringOrDone();
                return;
            } catch {
                sessionStorage.removeItem(SESSION_KEY);
            }
        }
        await this.renderTestList();
    }

    private storedSession(): StoredSession | null {
        try {
            const raw = sessionStorage.getItem(SESSION_KEY);
            return raw ? (JSON.parse(raw) as StoredSession) : null;
        } catch {
            return null;
        }
    }

    private screen(title: string): HTMLElement {
        this.root.replaceChildren();
        const box = el('div', { class: 'screen' });
        box.appendChild(el('h1', {}, title));
        this.root.appendChild(box);
        return box;
    }

    private showError(box: HTMLElement, message: string, onRetry: () => void): void {
        const banner = el('div', { class: 'error', role: 'alert' });
        banner.appendChild(el('p', {}, message));
        const retry = el('button', { type: 'button' }, 'Retry');
        retry.addEventListener('click', () => {
            banner.remove();
            onRetry();
        });
        banner.appendChild(retry);
        box.appendChild(banner);
    }

    private async renderTestList(): Promise<void> {
        const box = this.screen('Available tests');
        let tests: TestSummary[];
        try {
            tests = await this.client.listTests();
        } catch {
            this.showError(box, 'Could not reach the server.', () => void this.renderTestList());
            return;
        }
        if (tests.length === 0) {
            box.appendChild(el('p', {}, 'No tests are published.'));
            return;
        }
        const list = el('ul', { class: 'tests' });
        for (const test of tests) {
            const button = el('button', { type: 'button' }, test.title);
            button.addEventListener('click', () => void this.renderInstruction(test.test_id));
            const entry = el('li');
            entry.appendChild(button);
            list.appendChild(entry);
        }
        box.appendChild(list);
    }

    private async renderInstruction(testId: string): Promise<void> {
        const detail = await this.flow.loadTest(testId);
        const box = this.screen(detail.title);
        if (detail.instruction) {
            box.appendChild(el('p', { class: 'instruction' }, detail.instruction));
        }
        box.appendChild(el('p', {}, `${detail.total} questions.`));
        const begin = el('button', { type: 'button' }, 'Begin');
        begin.addEventListener('click', () => {
            this.flow.beginDemographics();
            this.renderDemographics();
        });
        box.appendChild(begin);
    }

    private demographicInput(field: DemographicFieldSpec): HTMLElement {
        const wrap = el('label', { class: 'field' });
        wrap.appendChild(el('span', {}, field.name));
        if (field.kind === 'choice') {
            const select = el('select', { name: field.name });
            select.appendChild(el('option', { value: '' }, 'choose...'));
            for (const choice of field.choices ?? []) {
                select.appendChild(el('option', { value: choice }, choice));
            }
            wrap.appendChild(select);
        } else {
            const input = el('input', {
                name: field.name,
                type: field.kind === 'integer' ? 'number' : 'text',
            });
            if (field.kind === 'integer') input.setAttribute('step', '1');
            wrap.appendChild(input);
        }
        return wrap;
    }

    private renderDemographics(): void {
        const test = this.flow.test;
        if (!test) return;
        const box = this.screen(test.title);
        const form = el('form', { class: 'demographics' });
        for (const field of test.demographics) form.appendChild(this.demographicInput(field));
        const submit = el('button', { type: 'submit' }, 'Start the test');
        form.appendChild(submit);
        form.addEventListener('submit', (event) => {
            event.preventDefault();
            const values: DemographicValues = {};
            for (const field of test.demographics) {
                const control = form.elements.namedItem(field.name) as
                    | HTMLInputElement
                    | HTMLSelectElement
                    | null;
                const raw = control?.value ?? '';
                if (field.kind === 'integer') {
                    const parsed = Number.parseInt(raw, 10);
                    if (Number.isNaN(parsed)) {
                        control?.setCustomValidity?.('enter a whole number');
                        form.reportValidity();
                        return;
                    }
                    values[field.name] = parsed;
                } else {
                    if (!raw && field.kind === 'choice') {
                        form.reportValidity();
                        return;
                    }
                    values[field.name] = raw;
                }
            }
            submit.setAttribute('disabled', 'disabled');
            this.flow
                .submitDemographics(values)
                .then(() => {
                    if (this.flow.sessionId && this.flow.test) {
                        sessionStorage.setItem(
                            SESSION_KEY,
                            JSON.stringify({
                                sessionId: this.flow.sessionId,
                                testId: this.flow.test.test_id,
                            }),
                        );
                    }
                    this.renderAnsweringOrDone();
                })
                .catch(() => {
                    submit.removeAttribute('disabled');
                    this.showError(box, 'Could not start the session.', () => form.requestSubmit());
                });
        });
        box.appendChild(form);
    }

    private renderAnsweringOrDone(): void {
        if (this.flow.phase === 'done' || this.flow.phase === 'results') {
            void this.renderCompletion();
        } else {
            this.renderItem();
        }
    }

    private renderItem(): void {
        const item = this.flow.current;
        const test = this.flow.test;
        if (!item || !test) return;
        const box = this.screen(test.title);
        box.appendChild(el('p', { class: 'progress' }, `Question ${item.ordinal} of ${item.total}`));
        box.appendChild(el('p', { class: 'item-text' }, item.text));
        const options = el('div', { class: 'options' });
        const buttons: HTMLButtonElement[] = [];
        item.options.forEach((label, index) => {
            const button = el('button', { type: 'button', 'data-index': String(index) }, label);
            button.addEventListener('click', () => {
                buttons.forEach((b) => b.setAttribute('disabled', 'disabled'));
                this.flow
                    .answer(index)
                    .then((sent) => {
                        if (sent) this.renderAnsweringOrDone();
                        else buttons.forEach((b) => b.removeAttribute('disabled'));
                    })
                    .catch(() => {
                        this.showError(box, 'The answer did not go through.', () => {
                            this.flow
                                .retry()
                                .then(() => this.renderAnsweringOrDone())
                                .catch(() => this.renderItem());
                        });
                    });
            });
            buttons.push(button);
            options.appendChild(button);
        });
        box.appendChild(options);
    }

    private async renderCompletion(): Promise<void> {
        sessionStorage.removeItem(SESSION_KEY);
        const title = this.flow.test?.title ?? 'Done';
        const box = this.screen(title);
        box.appendChild(el('p', {}, 'You have answered every question. Thank you.'));
        const results = await this.flow.fetchResults().catch(() => null);
        if (!results) {
            // withheld: the psychologist reads results from the session log
            return;
        }
        const section = el('div', { class: 'results' });
        section.appendChild(el('h2', {}, 'Interpretation'));
        for (const outcome of results.results) {
            const row = el('div', { class: 'result' });
            row.appendChild(el('h3', {}, outcome.category_name));
            row.appendChild(el('p', {}, outcome.interpretation));
            section.appendChild(row);
        }
        box.appendChild(section);
    }
}

export function mount(root: HTMLElement, baseUrl: string): App {
    const app = new App(root, new GatewayClient(baseUrl));
    void app.start();
    return app;
}
