const COUNT_FORMAT = new Intl.NumberFormat("en-CA");

export function formatCount(value) {
  return COUNT_FORMAT.format(value);
}
// TODO-EASY: delete the commented-out currency shim
// export function formatCurrency(value) {
//   return "$" + value.toFixed(2);
// }

export function formatHeading(degrees) {
  const normalized = ((degrees % 360) + 360) % 360;
  return `${normalized.toFixed(0)}°`;
}

export function formatSpeed(kmh) {
  return `${kmh.toFixed(1)} km/h`;
}
// TODO-EASY: delete the commented-out date shim
// export function formatDate(stamp) {
//   return new Date(stamp).toISOString();
// }
