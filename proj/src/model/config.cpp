#include "cael/config.hpp"

#include <functional>
#include <map>

namespace cael {

std::string_view fusion_name(FusionMode m) {
  switch (m) {
    case FusionMode::cross_attention: return "cross_attention";
    case FusionMode::concatenation: return "concatenation";
    case FusionMode::summation: return "summation";
  }
  return "?";
}

FusionMode parse_fusion(std::string_view s) {
  if (s == "cross_attention") return FusionMode::cross_attention;
  if (s == "concatenation") return FusionMode::concatenation;
  if (s == "summation") return FusionMode::summation;
  throw ConfigError("unknown fusion mode '" + std::string(s) + "'");
}

std::string_view query_name(QueryMode m) {
  switch (m) {
    case QueryMode::cls: return "cls";
    case QueryMode::patch: return "patch";
    case QueryMode::all: return "all";
  }
  return "?";
}

QueryMode parse_query(std::string_view s) {
  if (s == "cls") return QueryMode::cls;
  if (s == "patch") return QueryMode::patch;
  if (s == "all") return QueryMode::all;
  throw ConfigError("unknown query mode '" + std::string(s) + "'");
}

BranchSet BranchSet::parse(std::string_view s) {
  BranchSet b{false, false, false};
  for (char c : s) {
    switch (c) {
      case 'F': case 'f': b.fine = true; break;
      case 'C': case 'c': b.coarse = true; break;
      case 'E': case 'e': b.edge = true; break;
      case ',': case '+': case ' ': break;
      default: throw ConfigError("branch list '" + std::string(s) + "' may only contain F, C, E");
    }
  }
  if (b.empty()) throw ConfigError("branch list is empty");
  return b;
}

std::string BranchSet::to_string() const {
  std::string out;
  auto push = [&](const char* s) { out += out.empty() ? s : std::string("+") + s; };
  if (fine) push("F");
  if (coarse) push("C");
  if (edge) push("E");
  return out;
}

void CaelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (heads == 0 || dim == 0) fail("heads and dim must be positive");
  if (dim % heads != 0) fail("dim must be divisible by heads");
  if ((2 * dim) % heads != 0) fail("2*dim must be divisible by heads");
  if (image_size == 0 || image_size % 32 != 0) fail("image_size must be a positive multiple of 32");
  if (patch == 0 || grid_coarse() % patch != 0) fail("H/4 grid not divisible by patch size");
  if ((grid_coarse() / patch) != grid_fine())
    fail("patch size must give the coarse grid the same token count as the fine grid");
  if (branches.empty()) fail("at least one branch must be enabled");
  if (num_classes < 2) fail("num_classes must be at least 2");
  if (mlp_ratio <= 0.0) fail("mlp_ratio must be positive");
  if (K == 0) fail("K must be at least 1");
  if (fine_channels == 0 || coarse_channels == 0) fail("stem channels must be positive");
}

namespace {

using Setter = std::function<void(CaelConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const CaelConfig&)>;

std::size_t to_size(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < 0) throw ConfigError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(x);
}

#define CAEL_SIZE_FIELD(name, member)                                                        \
  {name,                                                                                     \
   {[](CaelConfig& c, const std::string& k, const std::string& v) { c.member = to_size(k, v); }, \
    [](const CaelConfig& c) { return std::to_string(c.member); }}}

const std::map<std::string, std::pair<Setter, Getter>>& schema() {
  static const std::map<std::string, std::pair<Setter, Getter>> fields{
      CAEL_SIZE_FIELD("model.K", K),
      CAEL_SIZE_FIELD("model.S", S),
      CAEL_SIZE_FIELD("model.L", L),
      CAEL_SIZE_FIELD("model.E", E),
      CAEL_SIZE_FIELD("model.N", N),
      CAEL_SIZE_FIELD("model.heads", heads),
      CAEL_SIZE_FIELD("model.dim", dim),
      CAEL_SIZE_FIELD("model.image_size", image_size),
      CAEL_SIZE_FIELD("model.fine_channels", fine_channels),
      CAEL_SIZE_FIELD("model.coarse_channels", coarse_channels),
      CAEL_SIZE_FIELD("model.patch", patch),
      CAEL_SIZE_FIELD("model.num_classes", num_classes),
      {"model.mlp_ratio",
       {[](CaelConfig& c, const std::string& k, const std::string& v) {
          c.mlp_ratio = parse_double(k, v);
        },
        [](const CaelConfig& c) { return format_double(c.mlp_ratio); }}},
      {"model.fusion",
       {[](CaelConfig& c, const std::string&, const std::string& v) { c.fusion = parse_fusion(v); },
        [](const CaelConfig& c) { return std::string(fusion_name(c.fusion)); }}},
      {"model.query",
       {[](CaelConfig& c, const std::string&, const std::string& v) { c.query = parse_query(v); },
        [](const CaelConfig& c) { return std::string(query_name(c.query)); }}},
      {"model.aeca",
       {[](CaelConfig& c, const std::string& k, const std::string& v) { c.aeca = parse_bool(k, v); },
        [](const CaelConfig& c) { return std::string(c.aeca ? "true" : "false"); }}},
      {"model.branches",
       {[](CaelConfig& c, const std::string&, const std::string& v) {
          c.branches = BranchSet::parse(v);
        },
        [](const CaelConfig& c) { return c.branches.to_string(); }}},
      {"model.operator",
       {[](CaelConfig& c, const std::string&, const std::string& v) {
          try {
            c.edge_operator = parse_operator(v);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
          }
        },
        [](const CaelConfig& c) { return std::string(operator_name(c.edge_operator)); }}},
  };
  return fields;
}

#undef CAEL_SIZE_FIELD

}  // namespace

void CaelConfig::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("model.", 0) != 0) continue;
    const auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second.first(*this, key, value);
  }
}

void CaelConfig::export_to(KeyValues& kv) const {
  for (const auto& [key, field] : schema()) kv.set(key, field.second(*this));
}

}  // namespace cael
