/** Browser bootstrap: API-key login, then mount the app. */

import { ApiClient } from './api.js';
import { App } from './app.js';

function mount(root: HTMLElement, baseUrl: string, apiKey: string): void {
  const api = new ApiClient(baseUrl, apiKey);
  const app = new App(root, api);
  app.start().catch((err) => {
    localStorage.removeItem('boardwatch-api-key');
    root.innerHTML = `<p class="view-error">login failed: ${err}</p>`;
    renderLogin(root, baseUrl);
  });
}

function renderLogin(root: HTMLElement, baseUrl: string): void {
  const form = document.createElement('form');
  form.className = 'login';
  const input = document.createElement('input');
  input.placeholder = 'API key (printed by boardwatch-server at startup)';
  input.className = 'api-key-input';
  const button = document.createElement('button');
  button.textContent = 'sign in';
  form.append(input, button);
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const key = input.value.trim();
    if (!key) return;
    localStorage.setItem('boardwatch-api-key', key);
    root.innerHTML = '';
    mount(root, baseUrl, key);
  });
  root.appendChild(form);
}

export function boot(): void {
  const root = document.getElementById('app');
  if (!root) return;
  const baseUrl = (window as unknown as { BOARDWATCH_API?: string }).BOARDWATCH_API ?? '';
  const saved = localStorage.getItem('boardwatch-api-key');
  if (saved) {
    mount(root, baseUrl, saved);
  } else {
    renderLogin(root, baseUrl);
  }
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  boot();
}
