/** Mission editor: JSON text with live client-side validation; the server
 * verdict on submit stays authoritative and is shown verbatim. */
import type { ApiClient } from "./api.js";
import type { MissionDoc } from "./types.js";
import { describeViolation, validateMission } from "./validate.js";

export class MissionEditor {
  onValidity: (violations: string[], parseError: string | null) => void = () => {};
  onSubmitResult: (text: string, ok: boolean) => void = () => {};
  onAccepted: (doc: MissionDoc) => void = () => {};

  constructor(private api: ApiClient) {}

  /** Client-side check of the editor buffer; called on every edit. */
  check(text: string): { doc: MissionDoc | null; violations: string[] } {
    let doc: MissionDoc;
    try {
      doc = JSON.parse(text) as MissionDoc;
    } catch (err) {
      this.onValidity([], `not valid JSON: ${(err as Error).message}`);
      return { doc: null, violations: ["malformed"] };
    }
    const violations = validateMission(doc);
    this.onValidity(violations, null);
    return { doc, violations };
  }

  /** Submit to the server; its verdict wins even if the client disagreed. */
  async submit(text: string): Promise<boolean> {
    const { doc } = this.check(text);
    if (doc === null) {
      this.onSubmitResult("fix the JSON before submitting", false);
      return false;
    }
    try {
      const result = await this.api.postMission(doc);
      if (result.status === "ok") {
        this.onSubmitResult(`stored as mission #${result.id}`, true);
        this.onAccepted(doc);
        return true;
      }
      const lines = result.violations
        .map((v) => `${v.code}: ${v.message}`)
        .join("\n");
      this.onSubmitResult(`server rejected:\n${lines}`, false);
      return false;
    } catch (err) {
      this.onSubmitResult(`submit failed: ${String(err)}`, false);
      return false;
    }
  }

  describe(codes: string[]): string[] {
    return codes.map((c) => describeViolation(c).message);
  }
}
