// Browser entry point: role login, then live rendering of the role views.

import { ApiClient, Role } from "./api.js";
import { SessionController } from "./controller.js";
import { el, renderForRole } from "./dom.js";

const ROLES: Role[] = ["tenant", "landlord", "arbitrator", "operator", "oracle"];

function gatewayUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("gateway") ?? window.location.origin;
}

async function boot(): Promise<void> {
  const root = document.getElementById("app")!;
  const api = new ApiClient(gatewayUrl());
  const ctl = new SessionController(api);

  const party = el("input", { placeholder: "party id (e.g. Alice)" }) as HTMLInputElement;
  const role = el("select", {}) as HTMLSelectElement;
  for (const r of ROLES) role.append(el("option", { value: r }, [r]));
  const status = el("p", { class: "muted" }, [""]);

  const login = el("button", {}, ["enter"]);
  login.addEventListener("click", async () => {
    try {
      await ctl.login(party.value.trim(), role.value as Role);
    } catch (err: any) {
      status.textContent = err?.message ?? String(err);
      return;
    }
    const header = el("header", {}, [
      el("strong", {}, [`${ctl.party}`]),
      ` (${ctl.role}) `,
      (() => {
        const out = el("button", {}, ["leave"]);
        out.addEventListener("click", async () => {
          await ctl.logout();
          window.location.reload();
        });
        return out;
      })(),
    ]);
    const panel = el("main", {});
    root.replaceChildren(header, panel);
    const rerender = () => renderForRole(panel, ctl, ctl.role);
    ctl.onChange(rerender);
    rerender();
  });

  root.replaceChildren(
    el("section", { class: "card login" }, [
      el("h1", {}, ["rental ledger"]),
      el("div", { class: "row" }, [party, role, login]),
      status,
    ]),
  );

  try {
    const known = await api.parties();
    status.textContent = `parties on this ledger: ${known.parties.join(", ")}`;
  } catch {
    status.textContent = `gateway unreachable at ${api.baseUrl}`;
  }
}

void boot();
