#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cue/evalkit.hpp"

namespace cue {

inline nlohmann::json report_json(const std::vector<MethodReport>& methods, const EvalOptions& opt) {
  nlohmann::json j;
  j["metadata"] = {{"threshold", opt.threshold},
                   {"ap_threshold", opt.ap_threshold},
                   {"n_bars_cap", opt.n_bars_cap},
                   {"averaging", "micro is canonical; macro = mean of per-track precision and recall"},
                   {"matching", "greedy one-to-one by descending score within +-tolerance"}};
  j["methods"] = nlohmann::json::array();
  for (const auto& m : methods) {
    nlohmann::json mj;
    mj["method"] = m.method;
    mj["tracks"] = m.tracks;
    mj["cosine_similarity"] = m.cosine;
    mj["scenarios"] = nlohmann::json::array();
    for (const auto& s : m.scenarios) {
      mj["scenarios"].push_back({{"tolerance", name(s.tolerance)},
                                 {"truth", name(s.truth)},
                                 {"precision", s.micro.precision},
                                 {"recall", s.micro.recall},
                                 {"f1", s.micro.f1},
                                 {"ap", s.ap},
                                 {"macro", {{"precision", s.macro.precision}, {"recall", s.macro.recall}, {"f1", s.macro.f1}}},
                                 {"tp", s.counts.tp},
                                 {"fp", s.counts.fp},
                                 {"fn", s.counts.fn}});
    }
    j["methods"].push_back(mj);
  }
  return j;
}

/// Plain-text table: one block per tolerance, column groups per ground-truth kind.
inline std::string report_table(const std::vector<MethodReport>& methods) {
  std::size_t name_w = 6;
  for (const auto& m : methods) name_w = std::max(name_w, m.method.size());
  std::string out;
  char buf[256];
  auto rule = [&] { out += std::string(name_w + 8 + 3 * 24, '-') + "\n"; };

  std::snprintf(buf, sizeof buf, "%-6s %-*s |%-23s|%-23s|%-23s\n", "", static_cast<int>(name_w), "", " cues-only", " 16-bars",
                " 8-bars");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-6s %-*s |", "", static_cast<int>(name_w), "method");
  out += buf;
  for (int g = 0; g < 3; ++g) out += "   P      R      F1   |";
  out += "\n";
  rule();
  for (Tolerance tol : kTolerances) {
    for (const auto& m : methods) {
      std::snprintf(buf, sizeof buf, "%-6s %-*s |", name(tol), static_cast<int>(name_w), m.method.c_str());
      out += buf;
      for (TruthKind k : kTruthKinds) {
        const auto& s = m.at(tol, k);
        std::snprintf(buf, sizeof buf, " %6.3f %6.3f %6.3f |", s.micro.precision, s.micro.recall, s.micro.f1);
        out += buf;
      }
      out += "\n";
    }
    rule();
  }

  out += "\nAverage precision (AP_C / AP_16 / AP_8)\n";
  for (Tolerance tol : kTolerances)
    for (const auto& m : methods) {
      std::snprintf(buf, sizeof buf, "%-6s %-*s | %6.3f %6.3f %6.3f\n", name(tol), static_cast<int>(name_w), m.method.c_str(),
                    m.at(tol, TruthKind::cues_only).ap, m.at(tol, TruthKind::bars16).ap, m.at(tol, TruthKind::bars8).ap);
      out += buf;
    }
  out += "\nCosine similarity of bar-quantized positions\n";
  for (const auto& m : methods) {
    std::snprintf(buf, sizeof buf, "%-*s | %6.3f\n", static_cast<int>(name_w), m.method.c_str(), m.cosine);
    out += buf;
  }
  return out;
}

}  // namespace cue
