// SessionViewModel reducer: journal events update the view optimistically and
// server snapshots reconcile it (the snapshot always wins), so nothing the
// console shows can contradict a later fetch.

import type {
  JournalEvent,
  MismatchReport,
  PendingClarification,
  Phase,
  SessionSnapshot,
  StakeholderVerdict,
} from './types';

export interface SessionViewModel {
  sessionId: string;
  phase: Phase;
  round: number;
  verdict: 'unconfirmed' | 'confirmed' | 'aborted';
  events: JournalEvent[];
  pendingClarifications: PendingClarification[];
  openMismatches: MismatchReport[];
  stakeholderVerdict: StakeholderVerdict | null;
  stale: boolean;
  error: string | null;
}

export function initialViewModel(sessionId: string): SessionViewModel {
  return {
    sessionId,
    phase: 'INIT',
    round: 0,
    verdict: 'unconfirmed',
    events: [],
    pendingClarifications: [],
    openMismatches: [],
    stakeholderVerdict: null,
    stale: false,
    error: null,
  };
}

export function isTerminal(vm: SessionViewModel): boolean {
  return vm.phase === 'CONFIRMED' || vm.phase === 'ABORTED';
}

/** Verdict controls: only a confirmed design awaiting the stakeholder's word. */
export function verdictControlsEnabled(vm: SessionViewModel): boolean {
  return vm.phase === 'CONFIRMED' && vm.stakeholderVerdict === null;
}

export function answerFormVisible(vm: SessionViewModel): boolean {
  return vm.phase === 'AWAIT_CLARIFICATION';
}

/** Everything read-only once the session is terminal (verdict aside). */
export function readOnly(vm: SessionViewModel): boolean {
  return isTerminal(vm);
}

const REFINE_PHASE: Record<string, Phase> = {
  analysis: 'REFINE_ANALYSIS',
  modeling: 'REFINE_MODELING',
  design: 'REFINE_DESIGN',
};

export function applyEvent(vm: SessionViewModel, event: JournalEvent): SessionViewModel {
  if (vm.events.some((existing) => existing.seq === event.seq)) {
    return vm; // defense in depth; the stream client already dedups
  }
  const next: SessionViewModel = { ...vm, events: [...vm.events, event].sort((a, b) => a.seq - b.seq) };
  const payload = event.payload as Record<string, any>;
  switch (event.kind) {
    case 'SessionStarted':
      next.phase = 'ANALYSIS';
      break;
    case 'AgentTaskCompleted':
      if (payload.role === 'analyst') {
        const clarifications = (payload.artifacts?.clarifications ?? []) as Array<Record<string, any>>;
        next.pendingClarifications = clarifications
          .filter((c) => c.status === 'pending')
          .map((c) => ({ question_id: c.question_id, risk_id: c.risk_id, question: c.question }));
        next.phase = next.pendingClarifications.length > 0 ? 'AWAIT_CLARIFICATION' : 'MODELING';
      } else if (payload.role === 'modeler') {
        next.phase = 'DESIGN';
      } else if (payload.role === 'designer') {
        next.phase = 'EVALUATION';
      }
      break;
    case 'ClarificationAnswered':
      next.pendingClarifications = next.pendingClarifications.filter(
        (c) => c.question_id !== payload.question_id,
      );
      if (next.pendingClarifications.length === 0) {
        next.phase = 'ANALYSIS';
      }
      break;
    case 'EvaluationCompleted': {
      next.round = Number(payload.round ?? next.round);
      const openIds = new Set((payload.open_mismatch_ids ?? []) as string[]);
      next.openMismatches = ((payload.mismatches ?? []) as MismatchReport[]).filter((m) =>
        openIds.has(m.id),
      );
      if (payload.decision === 'confirmed') {
        next.phase = 'CONFIRMED';
        next.verdict = 'confirmed';
      } else if (payload.decision === 'abort') {
        next.phase = 'ABORTED';
        next.verdict = 'aborted';
      } else if (typeof payload.routed_stage === 'string') {
        next.phase = REFINE_PHASE[payload.routed_stage] ?? next.phase;
      }
      break;
    }
    case 'RefinementRouted':
      if (payload.source === 'stakeholder') {
        next.phase = REFINE_PHASE[String(payload.stage)] ?? 'REFINE_DESIGN';
        next.verdict = 'unconfirmed';
      }
      break;
    case 'SessionConfirmed':
      next.phase = 'CONFIRMED';
      next.verdict = 'confirmed';
      break;
    case 'SessionAborted':
      next.phase = 'ABORTED';
      next.verdict = 'aborted';
      break;
    default:
      break;
  }
  return next;
}

/** A fresh server snapshot always overrides locally derived state. */
export function reconcile(vm: SessionViewModel, snapshot: SessionSnapshot): SessionViewModel {
  return {
    ...vm,
    phase: snapshot.phase,
    round: snapshot.round_count,
    verdict: snapshot.verdict,
    pendingClarifications: snapshot.pending_clarifications,
    openMismatches: snapshot.open_mismatches,
    stakeholderVerdict: snapshot.stakeholder_verdict,
    error: snapshot.error,
  };
}

export function setStale(vm: SessionViewModel, stale: boolean): SessionViewModel {
  return vm.stale === stale ? vm : { ...vm, stale };
}

/**
 * Serialized update queue: UI updates flow through one reducer pipeline so a
 * slow snapshot fetch cannot interleave with event application.
 */
export class SessionStore {
  private vm: SessionViewModel;
  private listeners: Array<(vm: SessionViewModel) => void> = [];

  constructor(sessionId: string) {
    this.vm = initialViewModel(sessionId);
  }

  get state(): SessionViewModel {
    return this.vm;
  }

  subscribe(listener: (vm: SessionViewModel) => void): () => void {
    this.listeners.push(listener);
    listener(this.vm);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  dispatch(update: (vm: SessionViewModel) => SessionViewModel): void {
    const next = update(this.vm);
    if (next === this.vm) return;
    this.vm = next;
    for (const listener of this.listeners) {
      listener(next);
    }
  }
}
