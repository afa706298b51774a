// Copyright 2026 The ccnaming Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ccn/eval.hpp"
#include "ccn/runner.hpp"

namespace ccn {

using nlohmann::json;

namespace {

// Just enough SVG to draw the three figures.
class Svg {
 public:
  Svg(int width, int height) : w_(width), h_(height) {
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
          << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\">\n";
    body_ << "<rect width=\"" << w_ << "\" height=\"" << h_ << "\" fill=\"white\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill, double opacity = 1.0) {
    body_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
          << "\" fill=\"" << fill << "\" fill-opacity=\"" << opacity << "\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0) {
    body_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
          << "\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                double width = 1.5) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << width
          << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << x << "," << y << " ";
    body_ << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 12, const std::string& anchor = "start") {
    body_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s << "</text>\n";
  }

  std::string str() {
    body_ << "</svg>\n";
    return body_.str();
  }

 private:
  int w_, h_;
  std::ostringstream body_;
};

const char* kTypeColors[kNumAnswerTypes] = {"#4C78A8", "#F58518", "#54A24B", "#E45756", "#B279A2"};
const char* kSeriesColors[] = {"#333333", "#4C78A8", "#9ecae1", "#E45756", "#f4a582", "#54A24B"};

void write_saliency_plot(const json& metrics, const OutputPaths& out) {
  std::vector<double> values;
  for (const auto& [glyph, s] : metrics["lexicon"]["test"]["saliency_per_char"].items()) {
    values.push_back(s.get<double>());
  }
  const int bins = 10;
  std::vector<int> counts(bins, 0);
  for (double v : values) {
    int b = static_cast<int>(v * bins);
    if (b >= bins) b = bins - 1;
    ++counts[b];
  }
  std::string csv = "bin_lo,bin_hi,count\n";
  for (int b = 0; b < bins; ++b) {
    char row[64];
    std::snprintf(row, sizeof row, "%.1f,%.1f,%d\n", b / static_cast<double>(bins),
                  (b + 1) / static_cast<double>(bins), counts[b]);
    csv += row;
  }
  write_file_atomic(out.plots_dir() + "/saliency_hist.csv", csv);

  const int W = 520, H = 340, mx = 50, my = 40;
  Svg svg(W, H);
  const int cmax = std::max(1, *std::max_element(counts.begin(), counts.end()));
  const double bw = (W - 2.0 * mx) / bins;
  for (int b = 0; b < bins; ++b) {
    const double h = (H - 2.0 * my) * counts[b] / cmax;
    svg.rect(mx + b * bw + 1, H - my - h, bw - 2, h, "#4C78A8", 0.9);
  }
  svg.line(mx, H - my, W - mx, H - my, "#333");
  svg.line(mx, my, mx, H - my, "#333");
  for (int b = 0; b <= bins; b += 2) {
    char lab[16];
    std::snprintf(lab, sizeof lab, "%.1f", b / static_cast<double>(bins));
    svg.text(mx + b * bw, H - my + 16, lab, 11, "middle");
  }
  svg.text(mx, my - 14, "Saliency of the test characters' phonetic radicals", 13);
  svg.text(W / 2.0, H - 6, "saliency", 12, "middle");
  write_file_atomic(out.plots_dir() + "/saliency_hist.svg", svg.str());
}

struct Series {
  std::string name;
  std::vector<long long> counts;
};

void write_overlap_plot(const json& metrics, const OutputPaths& out) {
  std::vector<Series> series;
  const auto add = [&](const std::string& name, const json& overlap) {
    if (overlap.is_null()) return;
    Series s;
    s.name = name;
    for (const auto& c : overlap["counts"]) s.counts.push_back(c.get<long long>());
    series.push_back(std::move(s));
  };
  if (!metrics["human"].is_null()) add("human-human", metrics["human"]["overlap"]);
  for (const char* exp : {"exp1", "exp2"}) {
    if (!metrics["experiments"].contains(exp)) continue;
    const json& e = metrics["experiments"][exp];
    if (e.contains("overlap_model_human")) {
      add(std::string(exp) + "-human (all)", e["overlap_model_human"]);
      add(std::string(exp) + "-human (best)", e["best_variant_by_overlap"]["overlap"]);
    }
    if (e.contains("overlap_model_model")) {
      add(std::string(exp) + "-" + exp + " (model-model)", e["overlap_model_model"]);
    }
  }
  if (series.empty()) return;

  std::string csv = "series,value,count\n";
  for (const Series& s : series) {
    const size_t n = s.counts.size() - 1;
    for (size_t k = 0; k < s.counts.size(); ++k) {
      char row[160];
      std::snprintf(row, sizeof row, "%s,%.6f,%lld\n", s.name.c_str(),
                    static_cast<double>(k) / static_cast<double>(n), s.counts[k]);
      csv += row;
    }
  }
  write_file_atomic(out.plots_dir() + "/overlap_density.csv", csv);

  const int W = 640, H = 380, mx = 55, my = 40;
  Svg svg(W, H);
  const int grid = 121;
  const double bandwidth = 0.04;
  double dmax = 0;
  std::vector<std::vector<double>> densities;
  for (const Series& s : series) {
    const size_t n = s.counts.size() - 1;
    long long total = 0;
    for (long long c : s.counts) total += c;
    std::vector<double> d(grid, 0.0);
    for (int g = 0; g < grid; ++g) {
      const double x = g / static_cast<double>(grid - 1);
      double f = 0;
      for (size_t k = 0; k < s.counts.size(); ++k) {
        if (!s.counts[k]) continue;
        const double z = (x - static_cast<double>(k) / static_cast<double>(n)) / bandwidth;
        f += static_cast<double>(s.counts[k]) * std::exp(-0.5 * z * z);
      }
      d[g] = total ? f / (static_cast<double>(total) * bandwidth * std::sqrt(2 * M_PI)) : 0.0;
      dmax = std::max(dmax, d[g]);
    }
    densities.push_back(std::move(d));
  }
  for (size_t si = 0; si < series.size(); ++si) {
    std::vector<std::pair<double, double>> pts;
    for (int g = 0; g < grid; ++g) {
      const double x = mx + (W - 2.0 * mx) * g / (grid - 1);
      const double y = H - my - (H - 2.0 * my) * (dmax > 0 ? densities[si][g] / dmax : 0);
      pts.emplace_back(x, y);
    }
    svg.polyline(pts, kSeriesColors[si % 6], 2.0);
    svg.text(W - mx - 220, my + 16.0 * static_cast<double>(si) + 4, series[si].name, 11);
    svg.line(W - mx - 245, my + 16.0 * static_cast<double>(si), W - mx - 225,
             my + 16.0 * static_cast<double>(si), kSeriesColors[si % 6], 2.0);
  }
  svg.line(mx, H - my, W - mx, H - my, "#333");
  svg.line(mx, my, mx, H - my, "#333");
  for (int k = 0; k <= 10; k += 2) {
    char lab[16];
    std::snprintf(lab, sizeof lab, "%.1f", k / 10.0);
    svg.text(mx + (W - 2.0 * mx) * k / 10.0, H - my + 16, lab, 11, "middle");
  }
  svg.text(mx, my - 14, "Overlap rate density", 13);
  svg.text(W / 2.0, H - 6, "overlap rate", 12, "middle");
  write_file_atomic(out.plots_dir() + "/overlap_density.svg", svg.str());
}

void write_production_plot(const json& metrics, const OutputPaths& out) {
  struct Panel {
    std::string name;
    const json* profiles;
  };
  std::vector<Panel> panels;
  if (!metrics["human"].is_null()) panels.push_back({"human", &metrics["human"]["profiles"]});
  for (const char* exp : {"exp1", "exp2"}) {
    if (metrics["experiments"].contains(exp)) {
      panels.push_back({exp, &metrics["experiments"][exp]["profiles"]});
    }
  }
  if (panels.empty()) return;

  std::vector<std::string> glyphs;
  for (const auto& [glyph, value] : panels[0].profiles->items()) glyphs.push_back(glyph);

  std::string csv = "series,glyph,type,probability\n";
  for (const Panel& p : panels) {
    for (const std::string& g : glyphs) {
      for (int t = 0; t < kNumAnswerTypes; ++t) {
        const char* name = to_string(static_cast<AnswerType>(t));
        char row[200];
        std::snprintf(row, sizeof row, "%s,%s,%s,%.9f\n", p.name.c_str(), g.c_str(), name,
                      (*p.profiles)[g][name].get<double>());
        csv += row;
      }
    }
  }
  write_file_atomic(out.plots_dir() + "/production_bars.csv", csv);

  const int panel_h = 150, W = std::max(640, 30 + static_cast<int>(glyphs.size()) * 9 + 30);
  const int H = 40 + panel_h * static_cast<int>(panels.size()) + 30;
  Svg svg(W, H);
  for (size_t pi = 0; pi < panels.size(); ++pi) {
    const double top = 40 + panel_h * static_cast<double>(pi);
    const double base = top + panel_h - 24;
    svg.text(30, top - 4, panels[pi].name, 12);
    const double bw = (W - 60.0) / static_cast<double>(glyphs.size());
    for (size_t gi = 0; gi < glyphs.size(); ++gi) {
      double y = base;
      for (int t = 0; t < kNumAnswerTypes; ++t) {
        const double v = (*panels[pi].profiles)[glyphs[gi]][to_string(static_cast<AnswerType>(t))]
                             .get<double>();
        const double h = (panel_h - 40.0) * v;
        y -= h;
        svg.rect(30 + gi * bw + 0.5, y, bw - 1, h, kTypeColors[t]);
      }
    }
    svg.line(30, base, W - 30, base, "#333");
  }
  for (int t = 0; t < kNumAnswerTypes; ++t) {
    const double x = 30 + 110.0 * t;
    svg.rect(x, H - 22, 10, 10, kTypeColors[t]);
    svg.text(x + 14, H - 13, to_string(static_cast<AnswerType>(t)), 11);
  }
  write_file_atomic(out.plots_dir() + "/production_bars.svg", svg.str());
}

std::string summary_markdown(const json& metrics) {
  std::ostringstream md;
  char buf[240];
  md << "# Results summary\n\n";
  const json& lex = metrics["lexicon"];
  md << "## Data\n\n";
  md << "- characters: " << lex["entries"] << ", radicals: " << lex["radicals"] << "\n";
  md << "- training sets: all=" << lex["training"]["all"]["characters"]
     << ", mid=" << lex["training"]["mid"]["characters"]
     << ", high=" << lex["training"]["high"]["characters"] << "\n";
  std::snprintf(buf, sizeof buf, "- test set: %lld characters, %lld pinyins, mean radical saliency %.2f\n",
                lex["test"]["characters"].get<long long>(), lex["test"]["pinyins"].get<long long>(),
                lex["test"]["mean_radical_saliency"].get<double>());
  md << buf;
  if (!metrics["human"].is_null()) {
    const json& h = metrics["human"];
    md << "\n## Humans\n\n";
    std::snprintf(buf, sizeof buf, "- %lld participants, mean accuracy %.1f%% (%.1f-%.1f)\n",
                  h["participants"].get<long long>(), 100 * h["mean_accuracy"].get<double>(),
                  100 * h["min_accuracy"].get<double>(), 100 * h["max_accuracy"].get<double>());
    md << buf;
    if (!h["accuracy_saliency_pearson"].is_null()) {
      std::snprintf(buf, sizeof buf, "- saliency effect r = %.2f\n",
                    h["accuracy_saliency_pearson"].get<double>());
      md << buf;
    }
    std::snprintf(buf, sizeof buf, "- human-human overlap %.1f%% over %lld pairs\n",
                  100 * h["overlap"]["mean"].get<double>(), h["overlap"]["pairs"].get<long long>());
    md << buf;
  }
  for (const char* exp : {"exp1", "exp2"}) {
    if (!metrics["experiments"].contains(exp)) continue;
    const json& e = metrics["experiments"][exp];
    md << "\n## " << exp << "\n\n";
    std::snprintf(buf, sizeof buf, "- %lld runs, grand mean accuracy %.1f%%\n",
                  e["runs"].get<long long>(), 100 * e["grand_mean_accuracy"].get<double>());
    md << buf;
    if (!e["saliency_pearson"].is_null()) {
      std::snprintf(buf, sizeof buf, "- saliency effect r = %.2f\n", e["saliency_pearson"].get<double>());
      md << buf;
    }
    if (e.contains("human_model_accuracy_pearson") && !e["human_model_accuracy_pearson"].is_null()) {
      std::snprintf(buf, sizeof buf, "- human-model character accuracy r = %.2f\n",
                    e["human_model_accuracy_pearson"].get<double>());
      md << buf;
    }
    if (e.contains("overlap_model_human")) {
      std::snprintf(buf, sizeof buf, "- model-human overlap %.1f%%, best variant %s (%.1f%%)\n",
                    100 * e["overlap_model_human"]["mean"].get<double>(),
                    e["best_variant_by_overlap"]["variant"].get<std::string>().c_str(),
                    100 * e["best_variant_by_overlap"]["mean"].get<double>());
      md << buf;
    }
    if (e.contains("cross_entropy")) {
      std::snprintf(buf, sizeof buf, "- cross-entropy H(human, model): pooled %.2f, per-character %.2f\n",
                    e["cross_entropy"]["pooled"].get<double>(),
                    e["cross_entropy"]["per_character_mean"].get<double>());
      md << buf;
    }
  }
  md << "\n## Files\n\n";
  md << "- plots/saliency_hist.svg, plots/overlap_density.svg, plots/production_bars.svg\n";
  md << "- tables/*.txt mirror the layouts used in the result tables\n";
  md << "- metrics.json holds every number in machine-readable form\n";
  return md.str();
}

}  // namespace

void cmd_report(const OutputPaths& out) {
  json metrics;
  try {
    metrics = json::parse(read_file(out.metrics()));
  } catch (const std::exception& e) {
    throw ValidationError("cannot read " + out.metrics() + " (run `ccn evaluate` first): " + e.what());
  }
  write_saliency_plot(metrics, out);
  write_overlap_plot(metrics, out);
  write_production_plot(metrics, out);
  write_file_atomic(out.root + "/summary.md", summary_markdown(metrics));
}

}  // namespace ccn
