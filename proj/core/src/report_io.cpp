#include "flowood/report_io.hpp"

#include <sstream>

#include <json.hpp>

namespace flowood {

namespace {

nlohmann::ordered_json histogram_json(const Histogram& h) {
  nlohmann::ordered_json j;
  j["edges"] = h.edges;
  j["counts"] = h.counts;
  return j;
}

}  // namespace

std::string to_json(const EvalReport& report, int indent) {
  nlohmann::ordered_json j;
  j["method"] = report.method;
  j["auroc"] = report.auroc;
  j["n_id"] = report.n_id;
  j["n_ood"] = report.n_ood;
  j["id_histogram"] = histogram_json(report.id_histogram);
  j["ood_histogram"] = histogram_json(report.ood_histogram);
  return j.dump(indent);
}

std::string to_json(const GeometryReport& report, int indent) {
  nlohmann::ordered_json j;
  j["n"] = report.n;
  j["t"] = report.t;
  j["uniformity"] = report.uniformity;
  j["negative_uniformity"] = report.negative_uniformity;
  j["tolerance"] = report.tolerance ? nlohmann::ordered_json(*report.tolerance)
                                    : nlohmann::ordered_json(nullptr);
  j["uniformity_pairs"] = report.uniformity_pairs;
  j["tolerance_pairs"] = report.tolerance_pairs;
  j["sampled"] = report.sampled;
  j["warnings"] = report.warnings;
  return j.dump(indent);
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out.precision(17);
  out << "edge_low,edge_high,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    out << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << '\n';
  return out.str();
}

}  // namespace flowood
