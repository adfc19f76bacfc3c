// Pure projections from session state to what each role's screens show.
// Kept free of DOM and network so the menu logic is unit-testable: which
// buttons a party gets, when the vote form disappears, which badge a
// maintenance issue carries.

import type { Entry } from "./api.js";
import { SessionState, Toast } from "./state.js";

const sameKey = (a: any, b: any) =>
  a && b && a.tenant === b.tenant && a.landlord === b.landlord && a.houseId === b.houseId;

export interface ProposalItem {
  externalId: number;
  houseId: string;
  tenant: string;
  landlord: string;
  rent: number;
  actions: ("accept" | "decline" | "withdraw" | "approve")[];
}

export interface LeaseItem {
  externalId: number;
  houseId: string;
  address: string;
  tenant: string;
  landlord: string;
  rent: number;
  remainingPaymentDates: string[];
  numArbitrators: number;
}

export type IssueBadge = "open" | "invitation active" | "arbitrators assigned";

export interface IssueItem {
  externalId: number;
  leaseExternalId: number | null;
  description: string;
  startingDate: string;
  badge: IssueBadge;
  arbitrators: string[];
  canMediate: boolean;
  canInvoke: boolean;
}

export interface AssessmentItem {
  externalId: number;
  creator: string;
  landlordPct: number;
  cost: number;
  actions: ("accept" | "reject")[];
}

export interface InvitationItem {
  externalId: number;
  required: number;
  confirmed: string[];
  invited: string[];
  canAccept: boolean;
  canConfirm: boolean;
}

export interface PollItem {
  externalId: number;
  visitor: string;
  visitDetails: string;
  assessmentDate: string;
  reparationDate: string;
  cost: number;
  voters: string[];
  alreadyVoted: string[];
  canVote: boolean; // the vote form is hidden once the party has voted
}

export interface ResultItem {
  externalId: number;
  method: string;
  landlordPct: number;
  tenantPct: number;
  cost: number;
}

export interface IouItem {
  externalId: number;
  owner: string;
  debtor: string;
  amount: number;
  dueDate: string;
}

export interface UserView {
  party: string;
  leases: LeaseItem[];
  pendingProposals: ProposalItem[];
  pendingRequests: ProposalItem[];
  issues: IssueItem[];
  assessments: AssessmentItem[];
  invitations: InvitationItem[];
  polls: PollItem[];
  results: ResultItem[];
  ious: IouItem[];
  toasts: Toast[];
}

function leaseItem(entry: Entry): LeaseItem {
  const p = entry.payload;
  return {
    externalId: entry.externalId,
    houseId: p.house.houseId,
    address: p.house.address,
    tenant: p.tenant,
    landlord: p.landlord,
    rent: p.terms.rent,
    remainingPaymentDates: p.remainingPaymentDates,
    numArbitrators: p.terms.numArbitrators,
  };
}

function resultItem(entry: Entry): ResultItem {
  const p = entry.payload;
  return {
    externalId: entry.externalId,
    method: p.method,
    landlordPct: p.responsibility.landlordPct,
    tenantPct: p.responsibility.tenantPct,
    cost: p.cost,
  };
}

export function userView(state: SessionState, party: string): UserView {
  const leases = state.byTemplate("LeaseAgreement").map(leaseItem);

  const pendingProposals = state.byTemplate("Proposal").map((entry): ProposalItem => {
    const p = entry.payload;
    const actions: ProposalItem["actions"] = [];
    if (party === p.landlord) actions.push("accept", "decline");
    if (party === p.tenant) actions.push("withdraw");
    return {
      externalId: entry.externalId,
      houseId: p.house.houseId,
      tenant: p.tenant,
      landlord: p.landlord,
      rent: p.terms.rent,
      actions,
    };
  });

  const pendingRequests = state.byTemplate("LACreationRequest").map((entry): ProposalItem => {
    const p = entry.payload;
    return {
      externalId: entry.externalId,
      houseId: p.house.houseId,
      tenant: p.tenant,
      landlord: p.landlord,
      rent: p.terms.rent,
      actions: party === p.operator ? ["approve"] : [],
    };
  });

  const issues = state.byTemplate("MIReport").map((entry): IssueItem => {
    const p = entry.payload;
    const lease = leases.find((l) => sameKey(p.laKey, { tenant: l.tenant, landlord: l.landlord, houseId: l.houseId }));
    const badge: IssueBadge = p.arbitrators.length
      ? "arbitrators assigned"
      : p.activeInvitation
        ? "invitation active"
        : "open";
    const isParty = party === p.tenant || party === p.landlord;
    return {
      externalId: entry.externalId,
      leaseExternalId: lease?.externalId ?? null,
      description: p.miDetails.description,
      startingDate: p.miDetails.startingDate,
      badge,
      arbitrators: p.arbitrators,
      canMediate: isParty,
      canInvoke: isParty && !p.activeInvitation,
    };
  });

  const assessments = state.byTemplate("MediationAssessment").map((entry): AssessmentItem => {
    const p = entry.payload;
    return {
      externalId: entry.externalId,
      creator: p.creator,
      landlordPct: p.responsibility.landlordPct,
      cost: p.cost,
      actions: party === p.counterpart ? ["accept", "reject"] : [],
    };
  });

  const invitations = state.byTemplate("InviteArbitrators").map((entry): InvitationItem => {
    const p = entry.payload;
    return {
      externalId: entry.externalId,
      required: p.required,
      confirmed: p.confirmed,
      invited: p.invited,
      canAccept: false, // users never sit on their own arbitration panel
      canConfirm:
        (party === p.tenant || party === p.landlord) && p.confirmed.length === p.required,
    };
  });

  const polls = state.byTemplate("Poll").map((entry) => pollItem(entry, party));

  return {
    party,
    leases,
    pendingProposals,
    pendingRequests,
    issues,
    assessments,
    invitations,
    polls,
    results: state.byTemplate("MIResult").map(resultItem),
    ious: state.byTemplate("IOU").map((entry): IouItem => {
      const p = entry.payload;
      return {
        externalId: entry.externalId,
        owner: p.owner,
        debtor: p.debtor,
        amount: p.amount,
        dueDate: p.dueDate,
      };
    }),
    toasts: state.toasts,
  };
}

function pollItem(entry: Entry, party: string): PollItem {
  const p = entry.payload;
  return {
    externalId: entry.externalId,
    visitor: p.visitor,
    visitDetails: p.visitDetails,
    assessmentDate: p.assessmentDate,
    reparationDate: p.reparationDate,
    cost: p.cost,
    voters: p.voters,
    alreadyVoted: p.alreadyVoted,
    canVote: p.voters.includes(party) && !p.alreadyVoted.includes(party),
  };
}

export interface AssignedIssueItem {
  externalId: number;
  description: string;
  startingDate: string;
  houseId: string;
  canOpenPoll: boolean; // no live poll yet for this issue
}

export interface ArbitratorView {
  party: string;
  invitations: InvitationItem[]; // pending ones the party can still join
  assignedIssues: AssignedIssueItem[];
  polls: PollItem[];
  results: ResultItem[];
  toasts: Toast[];
}

export function arbitratorView(state: SessionState, party: string): ArbitratorView {
  const polls = state.byTemplate("Poll").map((entry) => pollItem(entry, party));

  const invitations = state
    .byTemplate("InviteArbitrators")
    .filter((entry) => !state.isDismissed(entry.externalId))
    .map((entry): InvitationItem => {
      const p = entry.payload;
      return {
        externalId: entry.externalId,
        required: p.required,
        confirmed: p.confirmed,
        invited: p.invited,
        canAccept:
          p.invited.includes(party) &&
          !p.confirmed.includes(party) &&
          p.confirmed.length < p.required,
        canConfirm: false,
      };
    })
    .filter((item) => item.canAccept);

  const assignedIssues = state
    .byTemplate("MIReport")
    .filter((entry) => entry.payload.arbitrators.includes(party))
    .map((entry): AssignedIssueItem => {
      const p = entry.payload;
      const hasPoll = state
        .byTemplate("Poll")
        .some((poll) => sameKey(poll.payload.miRef?.laKey, p.laKey));
      return {
        externalId: entry.externalId,
        description: p.miDetails.description,
        startingDate: p.miDetails.startingDate,
        houseId: p.laKey.houseId,
        canOpenPoll: !hasPoll,
      };
    });

  return {
    party,
    invitations,
    assignedIssues,
    polls,
    results: state.byTemplate("MIResult").map(resultItem),
    toasts: state.toasts,
  };
}
