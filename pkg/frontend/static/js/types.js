/** Shared wire types mirroring the ground-station API payloads. */
export {};
