import init, { distance, matchColumns, integrate, exampleSynonyms } from "./pkg/fuzzy_fd_demo.js";

const T1 = `City,Country,Total Cases
Berlinn,Germany,1413
Toronto,Canada,1285
Barcelona,Spain,2430
New Delhi,India,2010`;
const T2 = `City,Country,Vaccination Rate
Toronto,CA,83%
,US,79%
Berlin,DE,76%
Barcelona,ES,87%`;
const T3 = `City,Death Rate
Berlin,0.4%
barcelona,0.9%
Toronto,0.6%
Boston,0.5%`;
const ALIGNMENT = {
  City: [1, 2, 3].map((table) => ({ table, column: "City" })),
  Country: [1, 2].map((table) => ({ table, column: "Country" })),
};

const $ = (id) => document.getElementById(id);

function el(tag, attrs = {}, ...children) {
  const node = document.createElement(tag);
  Object.assign(node, attrs);
  node.append(...children);
  return node;
}

function theta() {
  return Number($("theta").value);
}

function synonyms() {
  return $("use-synonyms").checked ? $("synonyms").value : "";
}

function attempt(target, f) {
  try {
    target.replaceChildren(...f());
  } catch (e) {
    target.replaceChildren(el("div", { className: "err", textContent: String(e) }));
  }
}

function showDistance() {
  attempt($("distance-out"), () => {
    const r = JSON.parse(distance($("left").value, $("right").value, theta(), synonyms()));
    const verdict = r.matches ? "matched" : "not matched";
    return [`distance ${r.distance.toFixed(4)}: ${verdict} at θ = ${theta().toFixed(2)}`];
  });
}

function showMatches() {
  attempt($("match-out"), () => {
    const columns = ["col1", "col2", "col3"].map((id) => $(id).value);
    const { sets } = JSON.parse(matchColumns(columns, theta(), synonyms()));
    return sets.map((s) => {
      const members = s.members.map((m) => `${m.value} (${m.column})`).join(", ");
      const edges = s.edges.map((e) => `${e.from} ~ ${e.to}: ${e.distance.toFixed(3)}`).join("; ");
      return el(
        "div",
        { className: "set" },
        el("span", { className: "rep", textContent: s.representative }),
        ` ← ${members}`,
        edges ? el("span", { className: "muted", textContent: `  [${edges}]` }) : "",
      );
    });
  });
}

function renderTable(result) {
  const head = el("tr", {}, ...result.attributes.map((a) => el("th", { textContent: a })), el("th", { textContent: "from" }));
  const rows = result.rows.map((row, i) =>
    el(
      "tr",
      {},
      ...row.map((v) => el("td", v === null ? { className: "null", textContent: "∅" } : { textContent: v })),
      el("td", { className: "muted", textContent: result.provenance[i] }),
    ),
  );
  return [el("table", {}, head, ...rows), el("div", { className: "muted", textContent: `${rows.length} tuples` })];
}

function showIntegration() {
  const tables = ["t1", "t2", "t3"].map((id) => $(id).value);
  const alignment = $("alignment").value;
  attempt($("fuzzy-out"), () => renderTable(JSON.parse(integrate(tables, alignment, theta(), true, synonyms()))));
  attempt($("regular-out"), () => renderTable(JSON.parse(integrate(tables, alignment, theta(), false, ""))));
}

function refresh() {
  $("theta-value").value = theta().toFixed(2);
  showDistance();
  showMatches();
  showIntegration();
}

await init();
$("synonyms").value = exampleSynonyms();
$("t1").value = T1;
$("t2").value = T2;
$("t3").value = T3;
$("alignment").value = JSON.stringify(ALIGNMENT, null, 2);
for (const input of document.querySelectorAll("input, textarea")) {
  input.addEventListener("input", refresh);
}
refresh();
