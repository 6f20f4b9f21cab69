// Kept while the v1 dashboard is still deployed for two tenants.

export const LEGACY_TENANTS = ["north-yard", "harbour"];
// TODO-NEVER: parked migration notes for the v1 dashboard
export function isLegacyTenant(tenantId) {
  return LEGACY_TENANTS.includes(tenantId);
}

export function legacyPayload(vehicle) {
  return {
    id: vehicle.id,
    label: vehicle.label,
    position: [vehicle.lat, vehicle.lon],
  };
}

export function legacyEndpoint(tenantId) {
  return `/v1/${tenantId}/vehicles`;
}
// TODO-EASY: drop the commented-out export kept for the v0 clients
// export const legacyExport = legacyPayload;
