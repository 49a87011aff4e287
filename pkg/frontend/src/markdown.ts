// Minimal markdown-to-DOM rendering: pipe tables, bullet lists, paragraphs,
// inline bold/code. Everything goes through textContent, never innerHTML,
// so answer text cannot inject markup.

function stripInline(text: string): string {
  return text.replace(/\*\*(.+?)\*\*/g, "$1").replace(/`([^`]+)`/g, "$1");
}

function splitRow(line: string): string[] {
  let work = line.trim();
  if (work.startsWith("|")) work = work.slice(1);
  if (work.endsWith("|")) work = work.slice(0, -1);
  return work.split("|").map((cell) => stripInline(cell.trim()));
}

function isSeparatorLine(line: string): boolean {
  const trimmed = line.trim();
  if (!trimmed.startsWith("|") || !trimmed.includes("-")) return false;
  return trimmed.replace(/[|\s:\-]/g, "").length === 0;
}

function buildTable(header: string, bodyLines: string[]): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "markdown-table";
  const thead = document.createElement("thead");
  const headRow = document.createElement("tr");
  for (const cell of splitRow(header)) {
    const th = document.createElement("th");
    th.textContent = cell;
    headRow.appendChild(th);
  }
  thead.appendChild(headRow);
  const tbody = document.createElement("tbody");
  for (const line of bodyLines) {
    const tr = document.createElement("tr");
    for (const cell of splitRow(line)) {
      const td = document.createElement("td");
      td.textContent = cell;
      tr.appendChild(td);
    }
    tbody.appendChild(tr);
  }
  table.appendChild(thead);
  table.appendChild(tbody);
  return table;
}

export function renderMarkdown(raw: string): DocumentFragment {
  const fragment = document.createDocumentFragment();
  const lines = raw.replace(/\r\n/g, "\n").split("\n");
  let i = 0;
  while (i < lines.length) {
    const line = lines[i];
    if (line.trim().startsWith("|") && i + 1 < lines.length && isSeparatorLine(lines[i + 1])) {
      const body: string[] = [];
      let j = i + 2;
      while (j < lines.length && lines[j].trim().startsWith("|") && !isSeparatorLine(lines[j])) {
        body.push(lines[j]);
        j += 1;
      }
      fragment.appendChild(buildTable(line, body));
      i = j;
      continue;
    }
    if (line.trim().startsWith("- ")) {
      const list = document.createElement("ul");
      while (i < lines.length && lines[i].trim().startsWith("- ")) {
        const item = document.createElement("li");
        item.textContent = stripInline(lines[i].trim().slice(2));
        list.appendChild(item);
        i += 1;
      }
      fragment.appendChild(list);
      continue;
    }
    if (line.trim() === "") {
      i += 1;
      continue;
    }
    const paragraph = document.createElement("p");
    const text: string[] = [];
    while (i < lines.length && lines[i].trim() !== "" && !lines[i].trim().startsWith("|") && !lines[i].trim().startsWith("- ")) {
      text.push(lines[i].trim());
      i += 1;
    }
    paragraph.textContent = stripInline(text.join(" "));
    fragment.appendChild(paragraph);
  }
  return fragment;
}
