// Browser bootstrap: open a session by id and render the live console.

import { MaadClient } from './api';
import { SessionController } from './controller';
import { ConsoleView } from './view';
import type { ArtifactKind } from './types';

function currentBaseUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get('api') ?? `${window.location.protocol}//${window.location.host}`;
}

async function openSession(root: HTMLElement, baseUrl: string, sessionId: string): Promise<void> {
  const client = new MaadClient(baseUrl);
  const controller = new SessionController(client, sessionId);
  const view = new ConsoleView(root, {
    onAnswer: (questionId, text) => void controller.answer(questionId, text),
    onVerdict: (decision, comment) => void controller.verdict(decision, comment),
    onSelectTab: (tab) =>
      void client
        .getArtifact(sessionId, tab as ArtifactKind)
        .then((data) => view.showArtifact(tab, data))
        .catch(() => view.showArtifact(tab, {})),
  });
  controller.store.subscribe((vm) => view.render(vm));
  await controller.refreshSnapshot();
  void controller.subscribe();
}

function boot(): void {
  const root = document.getElementById('app');
  if (!root) return;
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get('session');
  if (sessionId) {
    void openSession(root, currentBaseUrl(), sessionId);
    return;
  }
  const form = document.createElement('form');
  const input = document.createElement('input');
  input.placeholder = 'session id';
  const button = document.createElement('button');
  button.textContent = 'open';
  form.append(input, button);
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const id = input.value.trim();
    if (id) window.location.search = `?session=${encodeURIComponent(id)}`;
  });
  root.replaceChildren(form);
}

boot();
