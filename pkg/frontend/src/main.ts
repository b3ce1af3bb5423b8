import { HttpApi } from "./api";
import { Store } from "./state";
import { AggregationView } from "./views/aggregation";
import { DetailView } from "./views/detail";
import { MatrixView } from "./views/matrix";
import { ScatterView } from "./views/scatter";
import { TimelineView } from "./views/timeline";

const store = new Store(new HttpApi());

function panel(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing panel #${id}`);
  return el;
}

new ScatterView(panel("scatter"), store);
new AggregationView(panel("aggregation"), store);
new TimelineView(panel("timeline"), store);
new MatrixView(panel("matrix"), store);
new DetailView(panel("detail"), store);

store.init().catch((err) => {
  const banner = document.createElement("div");
  banner.className = "error-banner";
  banner.textContent = `Failed to reach the session service: ${err}`;
  document.body.prepend(banner);
});
