#include "fphist/serialize.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "fphist/error.hpp"

namespace fphist {

namespace {

Json bound(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::vector<double> read_bounds(const Json& j, double missing, const char* name) {
  if (!j.is_array()) throw ConfigError(std::string("rect '") + name + "' must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (v.is_null())
      out.push_back(missing);
    else if (v.is_number())
      out.push_back(v.get<double>());
    else
      throw ConfigError(std::string("rect '") + name + "' entries must be numbers or null");
  }
  return out;
}

void leaf_fields(Json& out, const Leaf& leaf) {
  const Json r = rect_to_json(leaf.cell);
  out["lower"] = r["lower"];
  out["upper"] = r["upper"];
  out["count"] = leaf.count;
}

}  // namespace

Json rect_to_json(const HyperRect& rect) {
  Json lo = Json::array(), hi = Json::array();
  for (std::size_t a = 0; a < rect.dim(); ++a) {
    lo.push_back(bound(rect.lower(a)));
    hi.push_back(bound(rect.upper(a)));
  }
  return Json{{"lower", lo}, {"upper", hi}};
}

HyperRect rect_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("lower") || !j.contains("upper"))
    throw ConfigError("rect needs 'lower' and 'upper'");
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto lo = read_bounds(j.at("lower"), -inf, "lower");
  auto hi = read_bounds(j.at("upper"), inf, "upper");
  if (lo.size() != hi.size()) throw ConfigError("rect 'lower' and 'upper' differ in length");
  return HyperRect(std::move(lo), std::move(hi));
}

Json partition_to_json(const PartitionTree& tree) {
  Json nodes = Json::array();
  for (const auto& node : tree.nodes()) {
    if (node.is_leaf()) {
      nodes.push_back(Json{{"leaf", node.leaf}});
    } else {
      nodes.push_back(
          Json{{"axis", node.axis}, {"cuts", node.cuts}, {"first_child", node.first_child}});
    }
  }
  Json leaves = Json::array();
  for (const auto& leaf : tree.leaves()) {
    Json l;
    leaf_fields(l, leaf);
    leaves.push_back(std::move(l));
  }
  return Json{{"rule", to_string(tree.rule())},
              {"dim", tree.dim()},
              {"samples", tree.sample_count()},
              {"cell_count", tree.cell_count()},
              {"height", tree.height()},
              {"nodes", std::move(nodes)},
              {"leaves", std::move(leaves)}};
}

Json estimate_to_json(const DensityEstimate& estimate) {
  Json leaves = Json::array();
  const auto& tree = estimate.tree();
  for (std::size_t r = 0; r < tree.leaf_count(); ++r) {
    Json l;
    leaf_fields(l, tree.leaves()[r]);
    l["value"] = estimate.value(r);
    leaves.push_back(std::move(l));
  }
  return Json{{"rule", to_string(tree.rule())},
              {"dim", tree.dim()},
              {"samples", tree.sample_count()},
              {"cell_count", tree.cell_count()},
              {"seed", estimate.seed()},
              {"self_integral", estimate.self_integral()},
              {"tail_mass", estimate.tail_mass()},
              {"unbounded_leaves", estimate.unbounded_leaf_count()},
              {"leaves", std::move(leaves)}};
}

Json error_report_to_json(const ErrorReport& report) {
  return Json{{"l1", report.l1},
              {"l1_total", report.l1_total},
              {"ref_tail_mass", report.ref_tail_mass},
              {"linf", report.linf},
              {"box", rect_to_json(report.box)},
              {"n_eval", report.n_eval},
              {"tail_mass", report.tail_mass},
              {"seed", report.seed}};
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

void write_slice_csv(std::ostream& out, const Slice& s) {
  for (std::size_t a : s.axes) out << 'x' << a + 1 << ',';
  out << "density\n";
  if (s.axes.size() == 1) {
    for (std::size_t i = 0; i < s.values.size(); ++i)
      out << format_double(s.breakpoints[0][i]) << ',' << format_double(s.values[i]) << '\n';
    return;
  }
  const std::size_t n1 = s.breakpoints[1].size();
  for (std::size_t i = 0; i < s.breakpoints[0].size(); ++i)
    for (std::size_t j = 0; j < n1; ++j)
      out << format_double(s.breakpoints[0][i]) << ',' << format_double(s.breakpoints[1][j]) << ','
          << format_double(s.values[i * n1 + j]) << '\n';
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << j.dump(2) << '\n';
}

Json read_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  try {
    return Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string ledger_header() {
  return "schema_version,problem,rule,M,k,tau,J,seed,l1,linf,tail,wall_time_s";
}

std::string ledger_line(const LedgerRow& row) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string s = std::to_string(kLedgerSchemaVersion);
  s += ',' + row.problem + ',' + row.rule + ',' + std::to_string(row.samples) + ',' +
       std::to_string(row.cell_count) + ',' + format_double(row.tau) + ',' +
       std::to_string(row.steps) + ',' + std::to_string(row.seed) + ',' + opt(row.l1) + ',' +
       opt(row.linf) + ',' + format_double(row.tail_mass) + ',' + format_double(row.wall_time_s);
  return s;
}

void append_ledger_row(const std::string& path, const LedgerRow& row) {
  namespace fs = std::filesystem;
  bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  if (!fresh) {
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    if (first != ledger_header())
      throw ConfigError("ledger " + path + " has an unexpected header: " + first);
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  std::ofstream out(path, std::ios::app);
  if (!out) throw ConfigError("cannot append to ledger " + path);
  if (fresh) out << ledger_header() << '\n';
  out << ledger_line(row) << '\n';
}

}  // namespace fphist
