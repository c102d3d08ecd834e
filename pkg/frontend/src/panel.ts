// Side-panel fragments rendered as HTML strings. Keeping these pure makes
// the red/green validator rows directly assertable in tests.

import { ConnectionState } from "./client.js";
import { ValidatorInfo } from "./protocol.js";

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => {
    switch (ch) {
      case "&":
        return "&amp;";
      case "<":
        return "&lt;";
      case ">":
        return "&gt;";
      case '"':
        return "&quot;";
      default:
        return "&#39;";
    }
  });
}

export function validatorPanelHtml(validators: ValidatorInfo[]): string {
  if (validators.length === 0) {
    return '<p class="muted">no validators attached</p>';
  }
  const rows = validators
    .map((v) => {
      const cls = v.passed ? "validator-ok" : "validator-violated";
      const detail = v.passed ? "ok" : `${v.violations} violation${v.violations === 1 ? "" : "s"}`;
      return `<tr class="${cls}"><td>${escapeHtml(v.name)}</td><td>${detail}</td></tr>`;
    })
    .join("");
  return `<table class="validators">${rows}</table>`;
}

export function connectionBannerHtml(state: ConnectionState, scenario: string | null): string {
  if (state === "connected") {
    return `<span class="state-connected">connected${scenario ? ` to ${escapeHtml(scenario)}` : ""}</span>`;
  }
  if (state === "connecting") {
    return '<span class="state-connecting">connecting ...</span>';
  }
  return '<span class="state-disconnected">disconnected - retrying</span>';
}
