#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cael/dataset.hpp"

namespace cael {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "manifest has " + std::to_string(problems.size()) + " problem(s)";
  for (const std::string& p : problems) out += "\n  " + p;
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename E, typename NameFn, std::size_t N>
bool parse_enum(std::string_view s, const std::array<E, N>& options, NameFn name, E& out) {
  for (E e : options)
    if (s == name(e)) {
      out = e;
      return true;
    }
  return false;
}

std::vector<std::string> identity_conflicts(std::span<const ManifestEntry> entries,
                                            std::span<const std::size_t> lines) {
  std::map<std::int64_t, std::map<Split, std::size_t>> seen;  // identity -> split -> first row
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].identity) seen[*entries[i].identity].emplace(entries[i].split, i);
  std::vector<std::string> problems;
  for (const auto& [id, splits] : seen) {
    if (splits.size() < 2) continue;
    std::string msg = "identity " + std::to_string(id) + " appears in several splits:";
    for (const auto& [split, row] : splits) {
      msg += " ";
      msg += split_name(split);
      msg += lines.empty() ? " (entry " + std::to_string(row) + ")"
                           : " (line " + std::to_string(lines[row]) + ")";
    }
    problems.push_back(msg);
  }
  return problems;
}

}  // namespace

ManifestError::ManifestError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

std::string format_manifest(std::span<const ManifestEntry> entries) {
  std::ostringstream os;
  os << "# path\tlevel1\tlevel2\tlevel3\tlevel4\tsplit\tidentity\n";
  for (const ManifestEntry& e : entries) {
    os << e.path << '\t' << authenticity_name(e.label.level1) << '\t'
       << forgery_name(e.label.level2) << '\t' << method_name(e.label.level3) << '\t'
       << (e.label.level4.empty() ? "none" : e.label.level4) << '\t' << split_name(e.split)
       << '\t';
    if (e.identity)
      os << *e.identity;
    else
      os << '-';
    os << '\n';
  }
  return os.str();
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << format_manifest(entries);
  if (!out.flush()) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::string> validate_entries(std::span<const ManifestEntry> entries) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string p = entries[i].label.problem();
    if (!p.empty()) problems.push_back("entry " + std::to_string(i) + " (" + entries[i].path + "): " + p);
  }
  for (std::string& p : identity_conflicts(entries, {})) problems.push_back(std::move(p));
  return problems;
}

std::vector<ManifestEntry> parse_manifest(std::string_view text,
                                          const std::optional<std::filesystem::path>& base_dir) {
  static constexpr std::array kAuth{Authenticity::real, Authenticity::fake};
  static constexpr std::array kForgery{ForgeryType::none, ForgeryType::efs, ForgeryType::am,
                                       ForgeryType::fs};
  static constexpr std::array kMethod{MethodFamily::none, MethodFamily::diffusion, MethodFamily::gan};
  static constexpr std::array kSplit{Split::train, Split::val, Split::test};

  std::vector<ManifestEntry> entries;
  std::vector<std::size_t> lines;
  std::vector<std::string> problems;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    if (line[line.find_first_not_of(" \t")] == '#') continue;

    const std::string where = "line " + std::to_string(line_no) + ": ";
    const auto f = split_tabs(line);
    if (f.size() != 7) {
      problems.push_back(where + "expected 7 tab-separated fields, found " + std::to_string(f.size()));
      continue;
    }
    ManifestEntry e;
    e.path = std::string(f[0]);
    bool ok = true;
    auto bad = [&](const char* field, std::string_view value) {
      problems.push_back(where + "invalid " + field + " '" + std::string(value) + "'");
      ok = false;
    };
    if (e.path.empty()) bad("path", f[0]);
    if (!parse_enum(f[1], kAuth, authenticity_name, e.label.level1)) bad("level1", f[1]);
    if (!parse_enum(f[2], kForgery, forgery_name, e.label.level2)) bad("level2", f[2]);
    if (!parse_enum(f[3], kMethod, method_name, e.label.level3)) bad("level3", f[3]);
    e.label.level4 = f[4].empty() ? "none" : std::string(f[4]);
    if (!parse_enum(f[5], kSplit, split_name, e.split)) bad("split", f[5]);
    if (f[6] != "-") {
      std::int64_t id = 0;
      const auto [ptr, ec] = std::from_chars(f[6].data(), f[6].data() + f[6].size(), id);
      if (ec != std::errc() || ptr != f[6].data() + f[6].size())
        bad("identity", f[6]);
      else
        e.identity = id;
    }
    if (!ok) continue;
    if (const std::string p = e.label.problem(); !p.empty()) {
      problems.push_back(where + p);
      continue;
    }
    if (base_dir && !std::filesystem::exists(*base_dir / e.path))
      problems.push_back(where + "image not found: " + (*base_dir / e.path).string());
    entries.push_back(std::move(e));
    lines.push_back(line_no);
  }
  for (std::string& p : identity_conflicts(entries, lines)) problems.push_back(std::move(p));
  if (!problems.empty()) throw ManifestError(std::move(problems));
  return entries;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError({"cannot open manifest " + path.string()});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path().empty() ? std::filesystem::path(".")
                                                             : path.parent_path());
}

}  // namespace cael
