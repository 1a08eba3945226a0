#include "cvtail/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cvtail/errors.hpp"

namespace cvtail {

namespace {

// JSON has no infinity; +inf travels as the string "inf".
nlohmann::json number(double v)
{
  if (std::isfinite(v))
    return v;
  if (std::isnan(v))
    return nullptr;
  return v > 0 ? "inf" : "-inf";
}

} // namespace

nlohmann::json report_envelope(std::string const& kind, ModelSpec const& model, std::uint64_t config_hash)
{
  return {{"schema", kReportSchema},
          {"kind", kind},
          {"model", model.canonical()},
          {"config_hash", hex_hash(config_hash)},
          {"note", "fitted constants and diagnostics are numerical evidence, not proofs"}};
}

nlohmann::json to_json(Evidence const& e)
{
  nlohmann::json j = {{"label", e.label}, {"outcome", to_string(e.outcome)}, {"detail", e.detail}};
  j["value"] = e.value ? number(*e.value) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(ConditionReport const& r)
{
  nlohmann::json ev = nlohmann::json::array();
  for (auto const& e : r.evidence)
    ev.push_back(to_json(e));
  return {{"theorem", to_string(r.theorem)},
          {"condition", std::string(1, r.condition_id)},
          {"outcome", to_string(r.outcome)},
          {"narrative", r.narrative},
          {"evidence", ev}};
}

nlohmann::json to_json(CIndexResult const& c)
{
  nlohmann::json curves = nlohmann::json::array();
  for (auto const& d : c.verdict.evidence)
    curves.push_back({{"y", d.y}, {"window_sup", number(d.window_sup)}, {"trend", to_string(d.trend)}});
  return {{"estimate", number(c.estimate)},
          {"raw_intercept", number(c.raw_intercept)},
          {"outcome", to_string(c.verdict.outcome)},
          {"note", c.verdict.note},
          {"curves", curves}};
}

nlohmann::json to_json(TruncationCertificate const& c)
{
  return {{"n_exact", c.n_exact},     {"eps_trunc", c.eps_trunc}, {"tail_mass", c.tail_mass},
          {"blocked", c.blocked},     {"blocks", c.blocks},       {"n_end", c.n_end},
          {"remainder", c.remainder}};
}

nlohmann::json to_json(TheoremVerdict const& v)
{
  nlohmann::json reports = nlohmann::json::array();
  for (auto const& r : v.reports)
    reports.push_back(to_json(r));
  nlohmann::json j = {{"theorem", to_string(v.theorem)},
                      {"hypothesis_met", to_string(v.hypothesis_met)},
                      {"exit_code", exit_code(v.hypothesis_met)},
                      {"conditions", reports}};
  j["conclusion"] = v.conclusion_check ? to_json(*v.conclusion_check) : nlohmann::json(nullptr);
  j["certificate"] = v.certificate ? to_json(*v.certificate) : nlohmann::json(nullptr);
  j["conclusion_note"] = v.conclusion_note;
  return j;
}

nlohmann::json to_json(TailEstimate const& e)
{
  return {{"x", e.x},
          {"p_hat", e.p_hat},
          {"ci_low", e.ci_low},
          {"ci_high", e.ci_high},
          {"confidence", 0.99},
          {"n_samples", e.n_samples},
          {"n_drawn", e.n_drawn},
          {"seed", e.seed},
          {"hits", e.hits},
          {"variance", e.variance},
          {"stratified", e.stratified},
          {"degenerate", e.degenerate}};
}

nlohmann::json to_json(BoundFit const& f)
{
  nlohmann::json rows = nlohmann::json::array();
  for (auto const& [n, r] : f.per_n)
    rows.push_back({{"n", n}, {"sup", number(r)}});
  return {{"c_hat", number(f.c_hat)},
          {"n_at", f.n_at},
          {"x_at", f.x_at},
          {"cells", f.cells},
          {"growth_in_n", f.growth.in_n},
          {"growth_in_x", f.growth.in_x},
          {"per_n", rows}};
}

std::string hex_hash(std::uint64_t h)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_atomic(std::string const& path, std::string const& content)
{
  namespace fs = std::filesystem;
  fs::path const target(path);
  if (target.has_parent_path())
    fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out)
      throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::vector<std::string> provenance(std::string const& command, ModelSpec const& model, std::uint64_t config_hash,
                                    std::string const& columns)
{
  return {"cvtail " + command, "model: " + model.canonical(), "config_hash: " + hex_hash(config_hash),
          "columns: " + columns};
}

} // namespace cvtail
