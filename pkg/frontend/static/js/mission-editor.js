import { describeViolation, validateMission } from "./validate.js";
export class MissionEditor {
    constructor(api) {
        this.api = api;
        this.onValidity = () => { };
        this.onSubmitResult = () => { };
        this.onAccepted = () => { };
    }
    /** Client-side check of the editor buffer; called on every edit. */
    check(text) {
        let doc;
        try {
            doc = JSON.parse(text);
        }
        catch (err) {
            this.onValidity([], `not valid JSON: ${err.message}`);
            return { doc: null, violations: ["malformed"] };
        }
        const violations = validateMission(doc);
        this.onValidity(violations, null);
        return { doc, violations };
    }
    /** Submit to the server; its verdict wins even if the client disagreed. */
    async submit(text) {
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
        }
        catch (err) {
            this.onSubmitResult(`submit failed: ${String(err)}`, false);
            return false;
        }
    }
    describe(codes) {
        return codes.map((c) => describeViolation(c).message);
    }
}
