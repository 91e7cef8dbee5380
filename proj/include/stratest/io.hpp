#pragma once

// File formats.
//
// Summary CSV (one row per stratum, header required, any column order):
//   stratum_id,N,n,mean_y,mean_x,mean_z,s_y,s_x,s_z,s_xy,s_yz,s_xz
//   [,rho_xy,rho_yz,rho_xz]   optional, empty cell = not published
// Unit CSV: stratum_id,y,x,z  (strata in order of first appearance)
// Moment JSON:
//   {"mean_y":..,"mean_x":..,"mean_z":..,
//    "moments": {"v200":..,"v020":..,"v002":..,"v110":..,"v101":..,"v011":..},
//    "dual_moments": {"dual": true, "v200":.., ...}}      dual part optional
// Simulation JSON:
//   {"seed": 7, "replications": 50000, "estimators": ["classical", ...],
//    "strata": [{"id": "a", "N": 2000, "n": 200, "mean": [y, x, z],
//                "sd": [y, x, z], "rho": {"xy": .9, "yz": .6, "xz": .5}}]}

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stratest/domain.hpp"
#include "stratest/error.hpp"
#include "stratest/estimators.hpp"
#include "stratest/moments.hpp"
#include "stratest/simulate.hpp"

namespace stratest {

using json = nlohmann::json;

enum class Schema { summary, units, moments };

inline std::optional<Schema> parse_schema(std::string_view s) {
  if (s == "summary") return Schema::summary;
  if (s == "units") return Schema::units;
  if (s == "moments") return Schema::moments;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// CSV primitives

namespace csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

/// Splits one CSV record. Fields may be double-quoted, with "" as an
/// escaped quote; unquoted fields are trimmed.
inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  for (;;) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::string field;
    if (i < line.size() && line[i] == '"') {
      ++i;
      for (;;) {
        if (i >= line.size()) throw InputError("unterminated quoted CSV field");
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field += line[i++];
      }
      while (i < line.size() && line[i] != ',') {
        if (line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
          throw InputError("unexpected text after a quoted CSV field");
        }
        ++i;
      }
    } else {
      const auto comma = line.find(',', i);
      field = std::string(trim(line.substr(i, comma == std::string_view::npos ? comma : comma - i)));
      i = comma == std::string_view::npos ? line.size() : comma;
    }
    out.push_back(std::move(field));
    if (i >= line.size()) break;
    ++i;  // comma
    if (i == line.size()) {
      out.emplace_back();
      break;
    }
  }
  return out;
}

/// Quotes a field when it contains a comma, quote or surrounding space.
inline std::string quote(std::string_view field) {
  const bool needs = field.find_first_of(",\"") != std::string_view::npos ||
                     (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Document {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

/// Header plus data rows; blank lines are skipped. Quoted fields may not
/// span lines.
inline Document parse(std::string_view text) {
  Document doc;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(text.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (doc.header.empty()) {
      doc.header = std::move(fields);
      continue;
    }
    if (fields.size() != doc.header.size()) {
      throw InputError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(doc.header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    doc.rows.push_back(std::move(fields));
    doc.line_numbers.push_back(line_no);
  }
  if (doc.header.empty()) throw InputError("CSV input is empty (header required)");
  return doc;
}

inline double to_double(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw InputError("line " + std::to_string(line) + ": column '" + column +
                     "' is not a finite number: '" + s + "'");
  }
  return v;
}

inline Count to_count(const std::string& s, std::size_t line, const std::string& column) {
  Count v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v < 0) {
    throw InputError("line " + std::to_string(line) + ": column '" + column +
                     "' is not a non-negative integer: '" + s + "'");
  }
  return v;
}

inline std::string number(double v) { return detail::shortest(v); }

}  // namespace csv

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << content;
}

// ---------------------------------------------------------------------------
// Summary schema

inline constexpr const char* kSummaryColumns[] = {"stratum_id", "N",   "n",    "mean_y",
                                                  "mean_x",     "mean_z", "s_y", "s_x",
                                                  "s_z",        "s_xy", "s_yz", "s_xz"};
inline constexpr const char* kRhoColumns[] = {"rho_xy", "rho_yz", "rho_xz"};

/// Strata from summary-schema CSV text. Sizes and covariances are not
/// validated here; run combine() and validate().
inline std::vector<StratumSummary> parse_summary_csv(std::string_view text) {
  const auto doc = csv::parse(text);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < doc.header.size(); ++i) {
    const auto& name = doc.header[i];
    bool known = false;
    for (const char* c : kSummaryColumns) known = known || name == c;
    for (const char* c : kRhoColumns) known = known || name == c;
    if (!known) throw InputError("summary schema: unknown column '" + name + "'");
    if (!col.emplace(name, i).second) {
      throw InputError("summary schema: duplicate column '" + name + "'");
    }
  }
  for (const char* c : kSummaryColumns) {
    if (!col.count(c)) throw InputError(std::string("summary schema: missing column '") + c + "'");
  }
  if (doc.rows.empty()) throw InputError("summary schema: no strata");

  std::vector<StratumSummary> out;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const auto line = doc.line_numbers[r];
    auto real = [&](const char* c) { return csv::to_double(row[col.at(c)], line, c); };
    auto opt_real = [&](const char* c) -> std::optional<double> {
      auto it = col.find(c);
      if (it == col.end() || row[it->second].empty()) return std::nullopt;
      return csv::to_double(row[it->second], line, c);
    };
    StratumSummary s;
    s.stratum_id = row[col.at("stratum_id")];
    if (s.stratum_id.empty()) {
      throw InputError("line " + std::to_string(line) + ": empty stratum_id");
    }
    s.N = csv::to_count(row[col.at("N")], line, "N");
    s.n = csv::to_count(row[col.at("n")], line, "n");
    s.mean_y = real("mean_y");
    s.mean_x = real("mean_x");
    s.mean_z = real("mean_z");
    s.s_y = real("s_y");
    s.s_x = real("s_x");
    s.s_z = real("s_z");
    s.s_xy = real("s_xy");
    s.s_yz = real("s_yz");
    s.s_xz = real("s_xz");
    s.rho_xy = opt_real("rho_xy");
    s.rho_yz = opt_real("rho_yz");
    s.rho_xz = opt_real("rho_xz");
    out.push_back(std::move(s));
  }
  return out;
}

/// Canonical summary CSV. The rho columns appear only when some stratum
/// carries a published correlation.
inline std::string write_summary_csv(const std::vector<StratumSummary>& strata) {
  const bool with_rho = std::any_of(strata.begin(), strata.end(), [](const StratumSummary& s) {
    return s.rho_xy || s.rho_yz || s.rho_xz;
  });
  std::ostringstream out;
  for (std::size_t i = 0; i < std::size(kSummaryColumns); ++i) {
    out << (i ? "," : "") << kSummaryColumns[i];
  }
  if (with_rho) {
    for (const char* c : kRhoColumns) out << ',' << c;
  }
  out << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? csv::number(*v) : std::string(); };
  for (const auto& s : strata) {
    out << csv::quote(s.stratum_id) << ',' << s.N << ',' << s.n;
    for (double v : {s.mean_y, s.mean_x, s.mean_z, s.s_y, s.s_x, s.s_z, s.s_xy, s.s_yz, s.s_xz}) {
      out << ',' << csv::number(v);
    }
    if (with_rho) out << ',' << opt(s.rho_xy) << ',' << opt(s.rho_yz) << ',' << opt(s.rho_xz);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Unit schema

inline std::vector<UnitFrame> parse_units_csv(std::string_view text) {
  const auto doc = csv::parse(text);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < doc.header.size(); ++i) col[doc.header[i]] = i;
  for (const char* c : {"stratum_id", "y", "x", "z"}) {
    if (!col.count(c)) throw InputError(std::string("unit schema: missing column '") + c + "'");
  }
  if (col.size() != 4 || doc.header.size() != 4) {
    throw InputError("unit schema: expected exactly stratum_id,y,x,z");
  }
  std::vector<UnitFrame> frames;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const auto line = doc.line_numbers[r];
    const auto& id = row[col["stratum_id"]];
    if (id.empty()) throw InputError("line " + std::to_string(line) + ": empty stratum_id");
    auto [it, inserted] = index.emplace(id, frames.size());
    if (inserted) frames.push_back(UnitFrame{id, {}, {}, {}});
    auto& f = frames[it->second];
    f.y.push_back(csv::to_double(row[col["y"]], line, "y"));
    f.x.push_back(csv::to_double(row[col["x"]], line, "x"));
    f.z.push_back(csv::to_double(row[col["z"]], line, "z"));
  }
  if (frames.empty()) throw InputError("unit schema: no units");
  return frames;
}

// ---------------------------------------------------------------------------
// Moment sets

inline json to_json(const MomentSet& m) {
  return json{{"v200", m.v200}, {"v020", m.v020}, {"v002", m.v002},
              {"v110", m.v110}, {"v101", m.v101}, {"v011", m.v011}};
}

inline json to_json(const DualMomentSet& m) {
  return json{{"dual", true},   {"v200", m.v200}, {"v020", m.v020}, {"v002", m.v002},
              {"v110", m.v110}, {"v101", m.v101}, {"v011", m.v011}};
}

namespace detail {

template <typename Set>
Set moments_from_json(const json& j, bool want_dual) {
  if (!j.is_object()) throw InputError("moment set must be a JSON object");
  const bool marked = j.contains("dual") && j.at("dual").is_boolean() && j.at("dual").get<bool>();
  if (marked != want_dual) {
    throw InputError(want_dual ? "dual moment set lacks \"dual\": true"
                               : "expected an unprimed moment set, found \"dual\": true");
  }
  auto get = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
      throw InputError(std::string("moment set: missing numeric key '") + key + "'");
    }
    return j.at(key).get<double>();
  };
  Set s;
  s.v200 = get("v200");
  s.v020 = get("v020");
  s.v002 = get("v002");
  s.v110 = get("v110");
  s.v101 = get("v101");
  s.v011 = get("v011");
  return s;
}

}  // namespace detail

inline MomentSet moment_set_from_json(const json& j) {
  return detail::moments_from_json<MomentSet>(j, false);
}
inline DualMomentSet dual_moment_set_from_json(const json& j) {
  return detail::moments_from_json<DualMomentSet>(j, true);
}

/// Everything the MSE theory consumes: combined means and moment sets.
/// Either computed from a population or supplied directly.
struct MomentDocument {
  PopulationMeans means;
  MomentSet moments;
  std::optional<DualMomentSet> dual;
};

inline MomentDocument moment_document(const PopulationSummary& pop) {
  MomentDocument doc;
  doc.means = pop.means();
  doc.moments = compute_moments(pop);
  if (!pop.has_census_stratum()) doc.dual = compute_dual_moments(pop);
  return doc;
}

inline json to_json(const MomentDocument& doc) {
  json j{{"mean_y", doc.means.y},
         {"mean_x", doc.means.x},
         {"mean_z", doc.means.z},
         {"moments", to_json(doc.moments)}};
  if (doc.dual) j["dual_moments"] = to_json(*doc.dual);
  return j;
}

inline MomentDocument moment_document_from_json(const json& j) {
  if (!j.is_object()) throw InputError("moment document must be a JSON object");
  MomentDocument doc;
  auto mean = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
      throw InputError(std::string("moment document: missing numeric '") + key + "'");
    }
    return j.at(key).get<double>();
  };
  doc.means = {mean("mean_y"), mean("mean_x"), mean("mean_z")};
  if (!j.contains("moments")) throw InputError("moment document: missing 'moments'");
  doc.moments = moment_set_from_json(j.at("moments"));
  if (j.contains("dual_moments")) doc.dual = dual_moment_set_from_json(j.at("dual_moments"));
  return doc;
}

inline MomentDocument parse_moment_document(std::string_view text) {
  try {
    return moment_document_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw InputError(std::string("moment document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Simulation document

struct SimulationDocument {
  PopulationSpec population;
  std::vector<Count> design;
  std::optional<Count> replications;
  std::vector<EstimatorSpec> estimators;
};

inline SimulationDocument parse_simulation_document(std::string_view text) {
  try {
    const json j = json::parse(text);
    SimulationDocument doc;
    doc.population.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("replications")) doc.replications = j.at("replications").get<Count>();
    if (j.contains("estimators")) {
      for (const auto& e : j.at("estimators")) {
        doc.estimators.push_back(parse_spec(e.get<std::string>()));
      }
    }
    if (!j.contains("strata") || !j.at("strata").is_array() || j.at("strata").empty()) {
      throw InputError("simulation document: 'strata' must be a nonempty array");
    }
    for (const auto& s : j.at("strata")) {
      StratumSpec spec;
      spec.stratum_id = s.at("id").is_string() ? s.at("id").get<std::string>()
                                               : std::to_string(s.at("id").get<long long>());
      spec.N = s.at("N").get<Count>();
      spec.mean = s.at("mean").get<std::array<double, 3>>();
      spec.sd = s.at("sd").get<std::array<double, 3>>();
      if (s.contains("rho")) {
        const auto& rho = s.at("rho");
        spec.rho_xy = rho.value("xy", 0.0);
        spec.rho_yz = rho.value("yz", 0.0);
        spec.rho_xz = rho.value("xz", 0.0);
      }
      doc.design.push_back(s.at("n").get<Count>());
      doc.population.strata.push_back(std::move(spec));
    }
    return doc;
  } catch (const json::exception& e) {
    throw InputError(std::string("simulation document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Loading with validation

/// Raised when validation finds an error that corrections did not repair.
class ValidationFailed : public InputError {
 public:
  ValidationFailed(const std::string& what, ValidationReport report)
      : InputError(what), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

struct LoadedPopulation {
  PopulationSummary population;  // corrected when a repair was applied
  ValidationReport report;
};

/// Validates and, if allowed, repairs a population. Throws ValidationFailed
/// when an unrepaired error remains.
inline LoadedPopulation accept_population(PopulationSummary pop, Corrections corrections) {
  auto report = validate(pop, corrections);
  if (report.blocking()) {
    std::string msg = "validation failed:";
    for (const auto& f : report.findings) {
      if (f.severity == Severity::error) {
        msg += " [" + f.stratum.value_or("population") + "] " + f.message + ";";
      }
    }
    throw ValidationFailed(msg, std::move(report));
  }
  if (report.corrected) pop = *report.corrected;
  return LoadedPopulation{std::move(pop), std::move(report)};
}

/// Sample sizes for unit-level input: explicit per-stratum sizes, or a
/// Neyman allocation of a total.
struct UnitDesign {
  std::vector<Count> sample_sizes;
  std::optional<Count> neyman_total;
};

inline PopulationSummary summarize_units(const std::vector<UnitFrame>& frames,
                                         const UnitDesign& design) {
  std::vector<Count> sizes = design.sample_sizes;
  if (sizes.empty()) {
    if (!design.neyman_total) {
      throw InputError("unit input needs sample sizes (--sample-sizes or --neyman-total)");
    }
    std::vector<AllocationInput> alloc;
    for (const auto& f : frames) {
      alloc.push_back({static_cast<Count>(f.size()), summarize_stratum(f, 1).s_y});
    }
    sizes = neyman_allocation(alloc, *design.neyman_total);
  }
  if (sizes.size() != frames.size()) {
    throw InputError("got " + std::to_string(sizes.size()) + " sample sizes for " +
                     std::to_string(frames.size()) + " strata");
  }
  std::vector<StratumSummary> strata;
  for (std::size_t h = 0; h < frames.size(); ++h) {
    strata.push_back(summarize_stratum(frames[h], sizes[h]));
  }
  return combine(std::move(strata));
}

inline LoadedPopulation load_population(const std::filesystem::path& path, Schema schema,
                                        Corrections corrections, const UnitDesign& design = {}) {
  const auto text = read_file(path);
  switch (schema) {
    case Schema::summary:
      return accept_population(combine(parse_summary_csv(text)), corrections);
    case Schema::units:
      return accept_population(summarize_units(parse_units_csv(text), design), corrections);
    case Schema::moments:
      break;
  }
  throw InputError("the moments schema carries no strata");
}

}  // namespace stratest
