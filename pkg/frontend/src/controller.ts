// Session orchestration shared by the browser shell and the tests: opens
// the role session, keeps SessionState in sync (full refetch on every feed
// (re)connect, patches in between), and wraps the commands the views fire.
// No optimistic updates anywhere: every action awaits the gateway response,
// which the store has already incorporated.

import { ApiClient, Role, Session } from "./api.js";
import { EventFeed, FeedEvent } from "./sse.js";
import { SessionState } from "./state.js";

export class SessionController {
  readonly state = new SessionState();
  session: Session | null = null;
  private feed: EventFeed | null = null;
  private listeners: (() => void)[] = [];

  constructor(
    readonly api: ApiClient,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private changed(): void {
    for (const listener of this.listeners) listener();
  }

  get sid(): string {
    if (!this.session) throw new Error("no session open");
    return this.session.session;
  }

  get party(): string {
    return this.session?.party ?? "";
  }

  get role(): Role {
    return this.session?.role ?? "tenant";
  }

  async login(party: string, role: Role, withFeed = true): Promise<void> {
    this.session = await this.api.openSession(party, role);
    await this.refresh();
    if (withFeed) {
      this.feed = new EventFeed(
        this.api.eventsUrl(this.sid),
        {
          onEvent: (event: FeedEvent) => {
            this.state.apply(event);
            this.changed();
          },
          // reconnects refetch everything; events in between only patch
          onConnect: () => this.refresh(),
        },
        this.fetchFn,
      );
      this.feed.start();
    }
  }

  async logout(): Promise<void> {
    this.feed?.stop();
    this.feed = null;
    if (this.session) {
      await this.api.closeSession(this.sid).catch(() => undefined);
      this.session = null;
    }
  }

  async refresh(): Promise<void> {
    const view = await this.api.store(this.sid);
    this.state.replaceAll(view.entries, view.offset);
    this.changed();
  }

  // -- user actions -----------------------------------------------------------

  async propose(body: {
    landlord: string;
    operator: string;
    houseId: string;
    address: string;
    rent: number;
    beginDate: string;
    paymentDates: string[];
    numArbitrators: number;
  }): Promise<void> {
    await this.api.propose(this.sid, {
      landlord: body.landlord,
      operator: body.operator,
      house: { houseId: body.houseId, address: body.address },
      terms: {
        rent: body.rent,
        beginDate: body.beginDate,
        paymentDates: body.paymentDates,
        numArbitrators: body.numArbitrators,
      },
    });
    await this.refresh();
  }

  async proposalAction(xid: number, action: "accept" | "decline" | "withdraw"): Promise<void> {
    if (action === "accept") await this.api.acceptProposal(this.sid, xid);
    else if (action === "decline") await this.api.declineProposal(this.sid, xid);
    else await this.api.withdrawProposal(this.sid, xid);
    await this.refresh();
  }

  async approve(xid: number): Promise<void> {
    await this.api.approveRequest(this.sid, xid);
    await this.refresh();
  }

  async reportIssue(leaseXid: number, description: string, startingDate: string): Promise<void> {
    await this.api.reportIssue(this.sid, leaseXid, description, startingDate);
    await this.refresh();
  }

  async submitAssessment(miXid: number, landlordPct: number, cost: number): Promise<void> {
    await this.api.submitAssessment(this.sid, miXid, landlordPct, cost);
    await this.refresh();
  }

  async resolveAssessment(xid: number, accept: boolean): Promise<void> {
    if (accept) await this.api.acceptAssessment(this.sid, xid);
    else await this.api.rejectAssessment(this.sid, xid);
    await this.refresh();
  }

  async triggerArbitration(miXid: number): Promise<void> {
    await this.api.invokeArbitrators(this.sid, miXid);
    await this.refresh();
  }

  async confirmAttribution(inviteXid: number): Promise<void> {
    await this.api.confirmAttribution(this.sid, inviteXid);
    await this.refresh();
  }

  // -- arbitrator actions --------------------------------------------------------

  async acceptInvitation(xid: number): Promise<void> {
    await this.api.acceptInvitation(this.sid, xid);
    await this.refresh();
  }

  rejectInvitation(xid: number): void {
    this.state.dismiss(xid); // purely local: declining is just not accepting
    this.changed();
  }

  async openPoll(
    miXid: number,
    body: {
      visitDetails: string;
      assessmentDate: string;
      reparationDate: string;
      cost: number;
      landlordPct: number;
    },
  ): Promise<void> {
    await this.api.openPoll(this.sid, miXid, body);
    await this.refresh();
  }

  /** Casts the vote; the last voter's client finalizes immediately. */
  async vote(pollXid: number, landlordPct: number): Promise<{ finalized: boolean }> {
    const out = await this.api.vote(this.sid, pollXid, landlordPct);
    let finalized = false;
    if (out.votingComplete) {
      await this.api.finalize(this.sid, out.poll.externalId);
      finalized = true;
    }
    await this.refresh();
    return { finalized };
  }
}
