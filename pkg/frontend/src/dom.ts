// Imperative DOM rendering of the role views. Everything is re-rendered
// from the view model on each state change; the lists are small enough
// that diffing would be ceremony.

import { Role } from "./api.js";
import { SessionController } from "./controller.js";
import {
  ArbitratorView,
  IssueItem,
  PollItem,
  UserView,
  arbitratorView,
  userView,
} from "./viewmodel.js";

export function el(
  tag: string,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  for (const child of children)
    node.append(typeof child === "string" ? document.createTextNode(child) : child);
  return node;
}

function button(label: string, onClick: () => void, cls = ""): HTMLElement {
  const b = el("button", cls ? { class: cls } : {}, [label]);
  b.addEventListener("click", onClick);
  return b;
}

function section(title: string, body: (Node | string)[]): HTMLElement {
  return el("section", { class: "card" }, [el("h2", {}, [title]), ...body]);
}

function money(minor: number): string {
  return (minor / 100).toFixed(2);
}

const run = (promise: Promise<unknown>) =>
  promise.catch((err) => window.alert(err?.message ?? String(err)));

function toastBar(view: UserView | ArbitratorView): HTMLElement {
  const recent = view.toasts.slice(-5);
  return el(
    "div",
    { class: "toasts" },
    recent.map((t) => {
      let text = `${t.kind}: ${t.template}`;
      if (t.kind === "iou") text = `rent due ${t.payload.dueDate}: ${money(t.payload.amount)}`;
      if (t.kind === "result" && t.payload.responsibility)
        text = `issue resolved ${t.payload.responsibility.landlordPct}/${t.payload.responsibility.tenantPct} (${t.payload.method})`;
      if (t.kind === "invitation") text = "new arbitration invitation";
      if (t.kind === "poll") text = "new poll to vote on";
      return el("span", { class: `toast toast-${t.kind}` }, [text]);
    }),
  );
}

function issueCard(ctl: SessionController, issue: IssueItem): HTMLElement {
  const children: (Node | string)[] = [
    el("p", {}, [
      el("strong", {}, [issue.description]),
      ` (since ${issue.startingDate}) `,
      el("span", { class: "badge" }, [issue.badge]),
    ]),
  ];
  if (issue.arbitrators.length)
    children.push(el("p", { class: "muted" }, [`panel: ${issue.arbitrators.join(", ")}`]));
  if (issue.canMediate) {
    const pct = el("input", { type: "number", min: "0", max: "100", value: "50" }) as HTMLInputElement;
    const cost = el("input", { type: "number", min: "0", value: "10000" }) as HTMLInputElement;
    children.push(
      el("div", { class: "row" }, [
        "landlord % ", pct, " repair cost (minor units) ", cost,
        button("propose mediation", () =>
          run(ctl.submitAssessment(issue.externalId, Number(pct.value), Number(cost.value)))),
      ]),
    );
  }
  if (issue.canInvoke)
    children.push(
      el("div", { class: "row" }, [
        button("trigger arbitration", () => run(ctl.triggerArbitration(issue.externalId))),
      ]),
    );
  return el("div", { class: "item" }, children);
}

function pollCard(ctl: SessionController, poll: PollItem): HTMLElement {
  const children: (Node | string)[] = [
    el("p", {}, [
      el("strong", {}, [`visit by ${poll.visitor}`]),
      ` — ${poll.visitDetails}; assessed ${poll.assessmentDate}, repair by ${poll.reparationDate}, cost ${money(poll.cost)}`,
    ]),
    el("p", { class: "muted" }, [
      `votes ${poll.alreadyVoted.length}/${poll.voters.length} (${poll.alreadyVoted.join(", ")})`,
    ]),
  ];
  if (poll.canVote) {
    const pct = el("input", { type: "number", min: "0", max: "100", value: "50" }) as HTMLInputElement;
    children.push(
      el("div", { class: "row" }, [
        "landlord % ", pct,
        button("vote", () => run(ctl.vote(poll.externalId, Number(pct.value)))),
      ]),
    );
  }
  return el("div", { class: "item" }, children);
}

export function renderUser(root: HTMLElement, ctl: SessionController): void {
  const view = userView(ctl.state, ctl.party);
  root.replaceChildren(
    toastBar(view),
    section("Lease agreements", view.leases.length
      ? view.leases.map((lease) =>
          el("div", { class: "item" }, [
            el("p", {}, [
              el("strong", {}, [`${lease.houseId}`]),
              ` ${lease.address} — ${lease.tenant} rents from ${lease.landlord}, ` +
              `${money(lease.rent)}/month, next dates: ${lease.remainingPaymentDates.slice(0, 3).join(", ") || "none"}`,
            ]),
            el("div", { class: "row" }, [
              (() => {
                const desc = el("input", { placeholder: "describe the problem" }) as HTMLInputElement;
                const since = el("input", { type: "date" }) as HTMLInputElement;
                return el("span", {}, [
                  desc, " since ", since, " ",
                  button("report issue", () =>
                    run(ctl.reportIssue(lease.externalId, desc.value, since.value))),
                ]);
              })(),
            ]),
          ]))
      : ["no leases yet"]),
    section("Pending proposals", view.pendingProposals.length
      ? view.pendingProposals.map((p) =>
          el("div", { class: "item row" }, [
            `${p.houseId}: ${p.tenant} -> ${p.landlord} at ${money(p.rent)} `,
            ...p.actions.map((a) =>
              button(a, () => run(ctl.proposalAction(p.externalId, a as any)))),
          ]))
      : ["none"]),
    section("Awaiting platform approval", view.pendingRequests.length
      ? view.pendingRequests.map((p) =>
          el("div", { class: "item row" }, [
            `${p.houseId}: ${p.tenant} + ${p.landlord} `,
            ...p.actions.map((a) => button(a, () => run(ctl.approve(p.externalId)))),
          ]))
      : ["none"]),
    section("Maintenance issues", view.issues.length
      ? view.issues.map((issue) => issueCard(ctl, issue))
      : ["none reported"]),
    section("Mediation offers", view.assessments.length
      ? view.assessments.map((a) =>
          el("div", { class: "item row" }, [
            `${a.creator} proposes ${a.landlordPct}% landlord, cost ${money(a.cost)} `,
            ...a.actions.map((act) =>
              button(act, () => run(ctl.resolveAssessment(a.externalId, act === "accept")))),
          ]))
      : ["none"]),
    section("Arbitration rounds", view.invitations.length
      ? view.invitations.map((inv) =>
          el("div", { class: "item row" }, [
            `${inv.confirmed.length}/${inv.required} arbitrators confirmed `,
            ...(inv.canConfirm
              ? [button("confirm panel", () => run(ctl.confirmAttribution(inv.externalId)))]
              : []),
          ]))
      : ["none running"]),
    section("Polls", view.polls.map((poll) => pollCard(ctl, poll))),
    section("Results", view.results.length
      ? view.results.map((r) =>
          el("div", { class: "item" }, [
            `${r.method}: landlord ${r.landlordPct}% / tenant ${r.tenantPct}%, cost ${money(r.cost)}`,
          ]))
      : ["none"]),
    section("Rent due (IOUs)", view.ious.length
      ? view.ious.map((iou) =>
          el("div", { class: "item" }, [
            `${iou.debtor} owes ${iou.owner} ${money(iou.amount)} for ${iou.dueDate}`,
          ]))
      : ["none"]),
    proposalForm(ctl),
  );
}

function proposalForm(ctl: SessionController): HTMLElement {
  const landlord = el("input", { placeholder: "landlord party" }) as HTMLInputElement;
  const operator = el("input", { placeholder: "operator", value: "Operator" }) as HTMLInputElement;
  const houseId = el("input", { placeholder: "house id" }) as HTMLInputElement;
  const address = el("input", { placeholder: "address" }) as HTMLInputElement;
  const rent = el("input", { type: "number", value: "80000" }) as HTMLInputElement;
  const begin = el("input", { type: "date" }) as HTMLInputElement;
  const dates = el("input", { placeholder: "payment dates, comma separated" }) as HTMLInputElement;
  const arbs = el("input", { type: "number", value: "3", min: "1" }) as HTMLInputElement;
  return section("Make a proposal", [
    el("div", { class: "grid" }, [
      landlord, operator, houseId, address, rent, begin, dates, arbs,
      button("submit proposal", () =>
        run(ctl.propose({
          landlord: landlord.value,
          operator: operator.value,
          houseId: houseId.value,
          address: address.value,
          rent: Number(rent.value),
          beginDate: begin.value,
          paymentDates: dates.value.split(",").map((d) => d.trim()).filter(Boolean),
          numArbitrators: Number(arbs.value),
        }))),
    ]),
  ]);
}

export function renderArbitrator(root: HTMLElement, ctl: SessionController): void {
  const view = arbitratorView(ctl.state, ctl.party);
  root.replaceChildren(
    toastBar(view),
    section("Invitations", view.invitations.length
      ? view.invitations.map((inv) =>
          el("div", { class: "item row" }, [
            `panel of ${inv.required}, ${inv.confirmed.length} confirmed `,
            button("accept", () => run(ctl.acceptInvitation(inv.externalId))),
            button("reject", () => ctl.rejectInvitation(inv.externalId)),
          ]))
      : ["none"]),
    section("Assigned issues", view.assignedIssues.length
      ? view.assignedIssues.map((issue) => {
          const children: (Node | string)[] = [
            el("p", {}, [el("strong", {}, [issue.description]), ` at ${issue.houseId}`]),
          ];
          if (issue.canOpenPoll) {
            const details = el("input", { placeholder: "visit details" }) as HTMLInputElement;
            const assessed = el("input", { type: "date" }) as HTMLInputElement;
            const repaired = el("input", { type: "date" }) as HTMLInputElement;
            const cost = el("input", { type: "number", value: "10000" }) as HTMLInputElement;
            const pct = el("input", { type: "number", min: "0", max: "100", value: "50" }) as HTMLInputElement;
            children.push(
              el("div", { class: "grid" }, [
                details, assessed, repaired, cost, pct,
                button("create poll (as visitor)", () =>
                  run(ctl.openPoll(issue.externalId, {
                    visitDetails: details.value,
                    assessmentDate: assessed.value,
                    reparationDate: repaired.value,
                    cost: Number(cost.value),
                    landlordPct: Number(pct.value),
                  }))),
              ]),
            );
          }
          return el("div", { class: "item" }, children);
        })
      : ["none"]),
    section("Polls", view.polls.length
      ? view.polls.map((poll) => pollCard(ctl, poll))
      : ["none"]),
    section("Results", view.results.length
      ? view.results.map((r) =>
          el("div", { class: "item" }, [
            `${r.method}: landlord ${r.landlordPct}% / tenant ${r.tenantPct}%, cost ${money(r.cost)}`,
          ]))
      : ["none"]),
  );
}

export function renderForRole(root: HTMLElement, ctl: SessionController, role: Role): void {
  if (role === "arbitrator") renderArbitrator(root, ctl);
  else renderUser(root, ctl);
}
