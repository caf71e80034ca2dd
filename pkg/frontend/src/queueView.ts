/**
 * Adjudication queue: the one place the UI writes.
 *
 * Items render with host, WHOIS excerpt, judge votes, and a link to the
 * live page.  Resolving posts a decision and re-renders from the server's
 * acknowledgement, so the view converges to server state no matter how
 * the round trip went:
 *
 *   success      -> item leaves the queue (ack carries the new pending set)
 *   409 conflict -> banner names the winning resolution, queue refreshed
 *   400 invalid  -> server's validation message shown, item stays editable
 *   network loss -> item stays pending with a retry affordance
 */

import { ApiError, ReviewApi } from "./api.js";
import { AdjudicationItem, CATEGORIES } from "./types.js";
import { clear, el } from "./render.js";

const CONFLICT_RE = /existing (\w+)\/(\w+) verdict/;

export class QueueView {
  private items: AdjudicationItem[] = [];
  private root: HTMLElement | null = null;
  private banner: HTMLElement | null = null;
  private list: HTMLElement | null = null;
  private adjudicatorInput: HTMLInputElement | null = null;

  onQueueChanged: ((pending: number) => void) | null = null;

  constructor(
    private readonly api: ReviewApi,
    private readonly runId: string,
  ) {}

  mount(root: HTMLElement): void {
    this.root = root;
    clear(root);

    const controls = el("div", "queue-controls");
    const label = el("label", "field-label", "Adjudicator");
    this.adjudicatorInput = el("input");
    this.adjudicatorInput.id = "adjudicator";
    this.adjudicatorInput.value = "reviewer";
    label.appendChild(this.adjudicatorInput);
    controls.appendChild(label);

    const refresh = el("button", "refresh", "Refresh queue");
    refresh.addEventListener("click", () => void this.load());
    controls.appendChild(refresh);
    root.appendChild(controls);

    this.banner = el("div", "banner hidden");
    root.appendChild(this.banner);

    this.list = el("div", "queue-list");
    root.appendChild(this.list);
  }

  async load(): Promise<void> {
    const items = await this.api.getQueue(this.runId);
    this.setItems(items);
  }

  pendingCount(): number {
    return this.items.length;
  }

  private setItems(items: AdjudicationItem[]): void {
    this.items = items;
    this.renderList();
    this.onQueueChanged?.(items.length);
  }

  private showBanner(text: string): void {
    if (!this.banner) return;
    this.banner.textContent = text;
    this.banner.classList.remove("hidden");
  }

  private hideBanner(): void {
    this.banner?.classList.add("hidden");
  }

  private renderList(): void {
    if (!this.list) return;
    clear(this.list);
    if (this.items.length === 0) {
      this.list.appendChild(el("p", "empty-state", "Queue is empty — nothing awaiting adjudication."));
      return;
    }
    for (const item of this.items) {
      this.list.appendChild(this.renderItem(item));
    }
  }

  private renderItem(item: AdjudicationItem): HTMLElement {
    const card = el("div", "queue-item");
    card.dataset.host = item.host;

    const head = el("div", "queue-item-head");
    head.appendChild(el("strong", "host", item.host));
    const link = el("a", "page-link", "open live page");
    link.href = `https://${item.host}/`;
    link.target = "_blank";
    link.rel = "noopener";
    head.appendChild(link);
    card.appendChild(head);

    card.appendChild(
      el("p", "whois", item.whois_summary ? item.whois_summary : "(no WHOIS data)"),
    );

    const votes = el("ul", "votes");
    for (const [judge, category] of item.votes) {
      votes.appendChild(el("li", "vote", `${judge} → ${category ?? "(judge failed)"}`));
    }
    card.appendChild(votes);

    const resolve = el("div", "resolve-row");
    const select = el("select", "category-select");
    for (const category of CATEGORIES) {
      const option = el("option", undefined, category);
      option.value = category;
      select.appendChild(option);
    }
    resolve.appendChild(select);

    const button = el("button", "resolve", "Resolve");
    button.addEventListener("click", () => void this.resolve(item, select.value, card, button));
    resolve.appendChild(button);

    const note = el("span", "item-note hidden");
    resolve.appendChild(note);
    card.appendChild(resolve);

    return card;
  }

  private itemNote(card: HTMLElement, text: string | null): void {
    const note = card.querySelector<HTMLElement>(".item-note");
    if (!note) return;
    if (text === null) {
      note.classList.add("hidden");
      note.textContent = "";
    } else {
      note.classList.remove("hidden");
      note.textContent = text;
    }
  }

  private async resolve(
    item: AdjudicationItem,
    category: string,
    card: HTMLElement,
    button: HTMLButtonElement,
  ): Promise<void> {
    this.hideBanner();
    this.itemNote(card, null);
    button.disabled = true;
    card.classList.add("resolving");
    const adjudicator = this.adjudicatorInput?.value.trim() || "reviewer";
    try {
      const ack = await this.api.postDecision(this.runId, item.host, category, adjudicator);
      this.setItems(ack.pending);
    } catch (error) {
      card.classList.remove("resolving");
      button.disabled = false;
      if (error instanceof ApiError && error.status === 409) {
        const won = CONFLICT_RE.exec(error.detail);
        this.showBanner(
          won
            ? `${item.host} was already resolved as ${won[2]} (${won[1]}) by another adjudicator.`
            : error.detail,
        );
        await this.load();
      } else if (error instanceof ApiError) {
        this.itemNote(card, error.detail);
      } else {
        this.itemNote(card, `request failed (${String(error)}) — use Retry`);
        button.textContent = "Retry";
      }
    }
  }
}
