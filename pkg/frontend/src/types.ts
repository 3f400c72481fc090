// Wire types mirroring the service API schemas.

export type Phase =
  | 'INIT'
  | 'ANALYSIS'
  | 'AWAIT_CLARIFICATION'
  | 'MODELING'
  | 'DESIGN'
  | 'EVALUATION'
  | 'REFINE_ANALYSIS'
  | 'REFINE_MODELING'
  | 'REFINE_DESIGN'
  | 'CONFIRMED'
  | 'ABORTED';

export type EventKind =
  | 'SessionStarted'
  | 'AgentTaskStarted'
  | 'AgentTaskCompleted'
  | 'ClarificationAsked'
  | 'ClarificationAnswered'
  | 'EvaluationCompleted'
  | 'RefinementRouted'
  | 'SessionConfirmed'
  | 'SessionAborted';

export interface JournalEvent {
  seq: number;
  timestamp: string;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export interface PendingClarification {
  question_id: string;
  risk_id: string;
  question: string;
}

export interface MismatchReport {
  id: string;
  kind: string;
  severity: number;
  requirement_refs: string[];
  artifact_refs: string[];
  description: string;
}

export interface StakeholderVerdict {
  decision: 'approve' | 'reject';
  comment: string;
}

export interface SessionSnapshot {
  session_id: string;
  phase: Phase;
  round_count: number;
  verdict: 'unconfirmed' | 'confirmed' | 'aborted';
  pending_clarifications: PendingClarification[];
  open_mismatches: MismatchReport[];
  artifact_inventory: string[];
  stakeholder_verdict: StakeholderVerdict | null;
  error: string | null;
}

export interface SessionConfigInput {
  max_rounds?: number;
  severity_threshold?: number;
  interactive?: boolean;
  backend?: string;
  top_k?: number;
}

export type ArtifactKind = 'requirements' | 'adrs' | 'views' | 'diagrams' | 'mismatches' | 'package';

export interface DiagramsArtifact {
  texts: { class: string; sequence: string[]; deployment: string };
  [key: string]: unknown;
}
