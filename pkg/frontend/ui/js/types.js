/**
 * Shared types for the annotation client.
 *
 * The service owns every rule and every number; these shapes mirror its
 * JSON responses field for field. Nothing here is computed client-side.
 */
export const CASE_TAGS = ["prep-dative", "animacy", "no-transfer", "idiom"];
//# sourceMappingURL=types.js.map