// Typed client for the gateway's JSON API. Every mutation is synchronous:
// the gateway answers after the commit, with the session store already
// updated, so callers can refetch (or trust the returned entries) safely.

export type Role = "tenant" | "landlord" | "arbitrator" | "operator" | "oracle";

export interface Entry {
  externalId: number;
  contractId: string;
  template: string;
  payload: Record<string, any>;
}

export interface Session {
  session: string;
  party: string;
  role: Role;
  offset: number;
}

export interface StoreView {
  offset: number;
  entries: Entry[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}/v1${path}`, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (resp.status === 204) return undefined as T;
    let parsed: any = null;
    const text = await resp.text();
    if (text) {
      try {
        parsed = JSON.parse(text);
      } catch {
        parsed = null;
      }
    }
    if (!resp.ok) {
      const err = parsed?.error ?? parsed?.detail ?? {};
      throw new ApiError(resp.status, err.code ?? "HttpError", err.message ?? text);
    }
    return parsed as T;
  }

  health(): Promise<{ status: string; offset: number; operator: string }> {
    return this.request("GET", "/health");
  }

  parties(): Promise<{ parties: string[] }> {
    return this.request("GET", "/parties");
  }

  openSession(party: string, role: Role): Promise<Session> {
    return this.request("POST", "/sessions", { party, role });
  }

  closeSession(sid: string): Promise<void> {
    return this.request("DELETE", `/sessions/${sid}`);
  }

  store(sid: string, template?: string): Promise<StoreView> {
    const query = template ? `?template=${encodeURIComponent(template)}` : "";
    return this.request("GET", `/sessions/${sid}/store${query}`);
  }

  eventsUrl(sid: string, types?: string[]): string {
    const query = types?.length ? `?types=${types.join(",")}` : "";
    return `${this.baseUrl}/v1/sessions/${sid}/events${query}`;
  }

  // -- lease workflow --------------------------------------------------------

  propose(
    sid: string,
    body: {
      landlord: string;
      operator: string;
      house: { houseId: string; address: string };
      terms: {
        rent: number;
        beginDate: string;
        paymentDates: string[];
        numArbitrators: number;
      };
    },
  ): Promise<{ proposal: Entry }> {
    return this.request("POST", `/sessions/${sid}/proposals`, body);
  }

  acceptProposal(sid: string, xid: number): Promise<{ request: Entry }> {
    return this.request("POST", `/sessions/${sid}/proposals/${xid}/accept`);
  }

  declineProposal(sid: string, xid: number): Promise<unknown> {
    return this.request("POST", `/sessions/${sid}/proposals/${xid}/decline`);
  }

  withdrawProposal(sid: string, xid: number): Promise<unknown> {
    return this.request("POST", `/sessions/${sid}/proposals/${xid}/withdraw`);
  }

  approveRequest(sid: string, xid: number): Promise<{ leaseAgreement: Entry }> {
    return this.request("POST", `/sessions/${sid}/la-requests/${xid}/approve`);
  }

  // -- maintenance issues ------------------------------------------------------

  reportIssue(
    sid: string,
    leaseXid: number,
    description: string,
    startingDate: string,
  ): Promise<{ miReport: Entry }> {
    return this.request("POST", `/sessions/${sid}/lease-agreements/${leaseXid}/mis`, {
      description,
      startingDate,
    });
  }

  submitAssessment(
    sid: string,
    miXid: number,
    landlordPct: number,
    cost: number,
  ): Promise<{ assessment: Entry }> {
    return this.request("POST", `/sessions/${sid}/mis/${miXid}/assessments`, {
      landlordPct,
      cost,
    });
  }

  acceptAssessment(sid: string, xid: number): Promise<{ result: Entry }> {
    return this.request("POST", `/sessions/${sid}/mediation/${xid}/accept`);
  }

  rejectAssessment(sid: string, xid: number): Promise<unknown> {
    return this.request("POST", `/sessions/${sid}/mediation/${xid}/reject`);
  }

  invokeArbitrators(sid: string, miXid: number): Promise<{ invite: Entry; miReport: Entry }> {
    return this.request("POST", `/sessions/${sid}/mis/${miXid}/invoke-arbitrators`, {});
  }

  acceptInvitation(sid: string, xid: number): Promise<{ invite: Entry }> {
    return this.request("POST", `/sessions/${sid}/invitations/${xid}/accept`);
  }

  confirmAttribution(sid: string, xid: number): Promise<{ miReport: Entry }> {
    return this.request("POST", `/sessions/${sid}/invitations/${xid}/confirm`);
  }

  openPoll(
    sid: string,
    miXid: number,
    body: {
      visitDetails: string;
      assessmentDate: string;
      reparationDate: string;
      cost: number;
      landlordPct: number;
    },
  ): Promise<{ poll: Entry }> {
    return this.request("POST", `/sessions/${sid}/mis/${miXid}/polls`, body);
  }

  vote(
    sid: string,
    pollXid: number,
    landlordPct: number,
  ): Promise<{ poll: Entry; votingComplete: boolean }> {
    return this.request("POST", `/sessions/${sid}/polls/${pollXid}/vote`, { landlordPct });
  }

  finalize(sid: string, pollXid: number): Promise<{ result: Entry }> {
    return this.request("POST", `/sessions/${sid}/polls/${pollXid}/finalize`);
  }

  // -- oracle ------------------------------------------------------------------

  oracleAdvance(sid: string): Promise<{ advanced: boolean; date: string; advanceMs: number }> {
    return this.request("POST", `/sessions/${sid}/oracle/advance`);
  }

  oracleProcess(
    sid: string,
  ): Promise<{ iousCreated: number; leases: number; lifecycleMs: number }> {
    return this.request("POST", `/sessions/${sid}/oracle/process`);
  }
}
