// Dark-mode toggle persisted in localStorage; light is the default.

const STORAGE_KEY = "soccerql-theme";

export type Theme = "light" | "dark";

export function storedTheme(): Theme {
  return localStorage.getItem(STORAGE_KEY) === "dark" ? "dark" : "light";
}

export function applyTheme(theme: Theme): void {
  document.documentElement.classList.toggle("dark", theme === "dark");
  localStorage.setItem(STORAGE_KEY, theme);
}

export function toggleTheme(): Theme {
  const next: Theme = storedTheme() === "dark" ? "light" : "dark";
  applyTheme(next);
  return next;
}

export function settingsPanel(): HTMLElement {
  const panel = document.createElement("div");
  panel.className = "settings";
  const label = document.createElement("label");
  label.className = "dark-toggle-label";
  label.textContent = "Dark mode";
  const toggle = document.createElement("input");
  toggle.type = "checkbox";
  toggle.className = "dark-toggle";
  toggle.checked = storedTheme() === "dark";
  toggle.addEventListener("change", () => {
    applyTheme(toggle.checked ? "dark" : "light");
  });
  label.prepend(toggle);
  panel.appendChild(label);
  return panel;
}
