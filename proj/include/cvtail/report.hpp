#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvtail/compound.hpp"
#include "cvtail/montecarlo.hpp"
#include "cvtail/theorem_checker.hpp"

namespace cvtail {

/// Version of the JSON envelope shared by every report kind.
inline constexpr int kReportSchema = 1;

/// {"schema": 1, "kind": kind, "model": ..., "config_hash": ..., "note": ...}
nlohmann::json report_envelope(std::string const& kind, ModelSpec const& model, std::uint64_t config_hash);

nlohmann::json to_json(Evidence const& e);
nlohmann::json to_json(ConditionReport const& r);
nlohmann::json to_json(TheoremVerdict const& v);
nlohmann::json to_json(TruncationCertificate const& c);
nlohmann::json to_json(TailEstimate const& e);
nlohmann::json to_json(BoundFit const& f);
nlohmann::json to_json(CIndexResult const& c);

/// Sixteen lowercase hex digits.
std::string hex_hash(std::uint64_t h);

/// Writes through a temporary file in the same directory and renames it
/// into place, creating parent directories as needed.
void write_atomic(std::string const& path, std::string const& content);

/// Header comments for CSV artifacts: tool, model, config hash, columns.
std::vector<std::string> provenance(std::string const& command, ModelSpec const& model, std::uint64_t config_hash,
                                    std::string const& columns);

} // namespace cvtail
