/**
 * DOM helpers with one hard rule: every number shown to the reviewer is a
 * verbatim projection of a server document field.
 *
 * num() renders a JSON number exactly (String(value)) and stamps the
 * element with the document it came from and the RFC 6901 pointer to the
 * field, e.g. data-doc="report" data-path="/charts/0/bars/3/segments/primary"
 * data-value="0.229".  That makes "does the DOM match the document?" a
 * mechanical walk instead of an argument, both in tests and in audits of
 * a live page.  resolvePointer() is the matching reader.
 */

export type DocName = "report" | "citations";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function num(value: number, doc: DocName, path: string): HTMLSpanElement {
  const span = el("span", "num");
  span.textContent = String(value);
  span.dataset.doc = doc;
  span.dataset.path = path;
  span.dataset.value = JSON.stringify(value);
  return span;
}

/** Resolve an RFC 6901 JSON Pointer ("/charts/0/bars/2/total") in a document. */
export function resolvePointer(document: unknown, pointer: string): unknown {
  if (pointer === "") return document;
  if (!pointer.startsWith("/")) {
    throw new Error(`bad JSON pointer: ${pointer}`);
  }
  let node: unknown = document;
  for (const raw of pointer.slice(1).split("/")) {
    const token = raw.replace(/~1/g, "/").replace(/~0/g, "~");
    if (Array.isArray(node)) {
      node = node[Number(token)];
    } else if (node !== null && typeof node === "object") {
      node = (node as Record<string, unknown>)[token];
    } else {
      return undefined;
    }
  }
  return node;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function svg<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, String(value));
  }
  return node;
}

export function clear(node: Element): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}
