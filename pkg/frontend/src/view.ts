// DOM rendering for the session console. Pure render-from-state; all writes go
// back through the controller callbacks.

import type { SessionViewModel } from './store';
import { answerFormVisible, isTerminal, verdictControlsEnabled } from './store';
import type { DiagramsArtifact, JournalEvent } from './types';

export interface ViewCallbacks {
  onAnswer(questionId: string, text: string): void;
  onVerdict(decision: 'approve' | 'reject', comment: string): void;
  onSelectTab(tab: string): void;
}

const TABS = ['requirements', 'adrs', 'diagrams', 'mismatches'] as const;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function describeEvent(event: JournalEvent): string {
  const payload = event.payload as Record<string, any>;
  switch (event.kind) {
    case 'AgentTaskStarted':
      return `${payload.role} starts ${payload.task} (round ${payload.round})`;
    case 'AgentTaskCompleted':
      return `${payload.role} finished in ${payload.attempts} attempt(s)`;
    case 'ClarificationAsked':
      return `question ${payload.question_id}: ${payload.question}`;
    case 'ClarificationAnswered':
      return `answer to ${payload.question_id}`;
    case 'EvaluationCompleted':
      return `round ${payload.round}: ${payload.decision}${payload.routed_stage ? ` -> ${payload.routed_stage}` : ''}`;
    case 'RefinementRouted':
      return `refinement routed to ${payload.stage} (${payload.source})`;
    case 'SessionAborted':
      return `aborted: ${payload.cause}`;
    default:
      return '';
  }
}

export class ConsoleView {
  private readonly phaseChip: HTMLElement;
  private readonly staleBadge: HTMLElement;
  private readonly timeline: HTMLElement;
  private readonly clarifications: HTMLElement;
  private readonly verdictBox: HTMLElement;
  private readonly tabBar: HTMLElement;
  private readonly tabBody: HTMLElement;
  private readonly errorBox: HTMLElement;

  constructor(
    root: HTMLElement,
    private readonly callbacks: ViewCallbacks,
  ) {
    root.replaceChildren();
    const header = el('header', 'console-header');
    this.phaseChip = el('span', 'phase-chip', 'INIT');
    this.staleBadge = el('span', 'stale-badge', 'connection lost, retrying');
    this.staleBadge.hidden = true;
    header.append(el('h1', undefined, 'design session'), this.phaseChip, this.staleBadge);

    this.errorBox = el('div', 'error-box');
    this.errorBox.hidden = true;

    this.clarifications = el('section', 'clarifications');
    this.verdictBox = el('section', 'verdict-box');
    this.timeline = el('ol', 'timeline');
    this.tabBar = el('nav', 'tab-bar');
    this.tabBody = el('section', 'tab-body');
    for (const tab of TABS) {
      const button = el('button', 'tab-button', tab);
      button.dataset.tab = tab;
      button.addEventListener('click', () => this.callbacks.onSelectTab(tab));
      this.tabBar.append(button);
    }

    const main = el('main', 'console-main');
    const left = el('div', 'timeline-pane');
    left.append(el('h2', undefined, 'timeline'), this.timeline);
    const right = el('div', 'detail-pane');
    right.append(this.errorBox, this.clarifications, this.verdictBox, this.tabBar, this.tabBody);
    main.append(left, right);
    root.append(header, main);
  }

  render(vm: SessionViewModel): void {
    this.phaseChip.textContent = vm.phase;
    this.phaseChip.dataset.terminal = String(isTerminal(vm));
    this.staleBadge.hidden = !vm.stale;
    this.errorBox.hidden = !vm.error;
    this.errorBox.textContent = vm.error ?? '';
    this.renderTimeline(vm);
    this.renderClarifications(vm);
    this.renderVerdict(vm);
  }

  private renderTimeline(vm: SessionViewModel): void {
    this.timeline.replaceChildren(
      ...vm.events.map((event) => {
        const item = el('li', `event event-${event.kind}`);
        item.dataset.seq = String(event.seq);
        item.append(
          el('span', 'event-seq', String(event.seq)),
          el('span', 'event-kind', event.kind),
          el('span', 'event-detail', describeEvent(event)),
        );
        return item;
      }),
    );
  }

  private renderClarifications(vm: SessionViewModel): void {
    this.clarifications.replaceChildren();
    this.clarifications.hidden = !answerFormVisible(vm);
    if (this.clarifications.hidden) return;
    this.clarifications.append(el('h2', undefined, 'stakeholder questions'));
    for (const pending of vm.pendingClarifications) {
      const form = el('form', 'answer-form');
      form.dataset.questionId = pending.question_id;
      const label = el('label', undefined, `${pending.question_id}: ${pending.question}`);
      const input = el('input');
      input.type = 'text';
      input.name = 'answer';
      const send = el('button', undefined, 'answer');
      send.type = 'submit';
      form.append(label, input, send);
      form.addEventListener('submit', (submitEvent) => {
        submitEvent.preventDefault();
        const text = input.value.trim();
        if (!text) return; // empty answers never leave the client
        this.callbacks.onAnswer(pending.question_id, text);
      });
      this.clarifications.append(form);
    }
  }

  private renderVerdict(vm: SessionViewModel): void {
    this.verdictBox.replaceChildren();
    if (vm.stakeholderVerdict) {
      const badge = el('span', `verdict-badge verdict-${vm.stakeholderVerdict.decision}`);
      badge.textContent = vm.stakeholderVerdict.decision === 'approve' ? 'approved' : 'rejected';
      this.verdictBox.append(badge);
      return;
    }
    if (!verdictControlsEnabled(vm)) {
      this.verdictBox.hidden = true;
      return;
    }
    this.verdictBox.hidden = false;
    const comment = el('input');
    comment.type = 'text';
    comment.placeholder = 'comment';
    const approve = el('button', 'approve-button', 'approve');
    approve.addEventListener('click', () => this.callbacks.onVerdict('approve', comment.value));
    const reject = el('button', 'reject-button', 'reject');
    reject.addEventListener('click', () => this.callbacks.onVerdict('reject', comment.value));
    this.verdictBox.append(el('h2', undefined, 'confirmed: your verdict'), comment, approve, reject);
  }

  showArtifact(tab: string, data: Record<string, unknown>): void {
    for (const button of this.tabBar.querySelectorAll('button')) {
      button.classList.toggle('active', button.dataset.tab === tab);
    }
    this.tabBody.replaceChildren();
    if (tab === 'requirements') {
      const table = el('table', 'requirements-table');
      const head = el('tr');
      for (const column of ['id', 'kind', 'text']) head.append(el('th', undefined, column));
      table.append(head);
      for (const requirement of (data.requirement_set ?? []) as Array<Record<string, any>>) {
        const row = el('tr');
        row.append(
          el('td', undefined, requirement.id),
          el('td', undefined, requirement.kind),
          el('td', undefined, requirement.text),
        );
        table.append(row);
      }
      this.tabBody.append(table);
    } else if (tab === 'adrs') {
      for (const adr of (data.adrs ?? []) as Array<Record<string, any>>) {
        const card = el('article', 'adr-card');
        card.append(
          el('h3', undefined, `${adr.id} ${adr.title}`),
          el('p', 'adr-category', adr.category),
          el('p', undefined, adr.decision),
        );
        this.tabBody.append(card);
      }
    } else if (tab === 'diagrams') {
      const diagrams = data as unknown as DiagramsArtifact;
      const blocks: Array<[string, string]> = [
        ['class diagram', diagrams.texts.class],
        ...diagrams.texts.sequence.map((text, i) => [`sequence ${i + 1}`, text] as [string, string]),
        ['deployment diagram', diagrams.texts.deployment],
      ];
      for (const [title, text] of blocks) {
        this.tabBody.append(el('h3', undefined, title), el('pre', 'diagram-text', text));
      }
    } else {
      const list = el('ul', 'mismatch-list');
      for (const mismatch of (data.open_mismatches ?? []) as Array<Record<string, any>>) {
        list.append(el('li', undefined, `[sev ${mismatch.severity}] ${mismatch.kind}: ${mismatch.description}`));
      }
      this.tabBody.append(list);
    }
  }
}
