#include "expcost/instance_io.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace expcost {
namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out = "instance format error";
  for (const auto& l : lines) out += "\n  " + l;
  return out;
}

// Line/column of a byte offset into text (both 1-based).
std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

InstanceFormatError::InstanceFormatError(std::vector<std::string> diagnostics)
    : std::runtime_error(join_lines(diagnostics)), diagnostics_(std::move(diagnostics)) {}

nlohmann::json instance_to_json(const ProblemInstance& inst) {
  nlohmann::json doc;
  doc["nodes"] = nlohmann::json::array();
  for (NodeId v = 0; v < inst.node_count(); ++v) {
    doc["nodes"].push_back({{"id", v}, {"p", inst.success_prob(v)}});
  }
  doc["edges"] = nlohmann::json::array();
  for (const Edge& e : inst.edges()) {
    doc["edges"].push_back({{"u", e.u}, {"v", e.v}, {"cost", e.cost}});
  }
  doc["start"] = inst.start();
  return doc;
}

ProblemInstance instance_from_json(const nlohmann::json& doc) {
  std::vector<std::string> diags;
  if (!doc.is_object()) throw InstanceFormatError({"/: document must be an object"});

  auto need_array = [&](const char* key) -> const nlohmann::json* {
    auto it = doc.find(key);
    if (it == doc.end()) {
      diags.push_back(std::string("/") + key + ": missing");
      return nullptr;
    }
    if (!it->is_array()) {
      diags.push_back(std::string("/") + key + ": must be an array");
      return nullptr;
    }
    return &*it;
  };

  const nlohmann::json* nodes = need_array("nodes");
  const nlohmann::json* edges = need_array("edges");

  std::vector<double> probs;
  if (nodes) {
    probs.assign(nodes->size(), -1.0);
    std::set<long long> seen;
    for (std::size_t i = 0; i < nodes->size(); ++i) {
      const auto& node = (*nodes)[i];
      const std::string where = "/nodes/" + std::to_string(i);
      if (!node.is_object()) {
        diags.push_back(where + ": must be an object");
        continue;
      }
      auto id = node.find("id");
      auto p = node.find("p");
      if (id == node.end() || !id->is_number_integer()) {
        diags.push_back(where + "/id: missing or not an integer");
        continue;
      }
      const long long idv = id->get<long long>();
      if (idv < 0 || idv >= static_cast<long long>(nodes->size())) {
        diags.push_back(where + "/id: " + std::to_string(idv) + " not in 0.." +
                        std::to_string(nodes->size() - 1));
        continue;
      }
      if (!seen.insert(idv).second) {
        diags.push_back(where + "/id: duplicate id " + std::to_string(idv));
        continue;
      }
      if (p == node.end() || !p->is_number()) {
        diags.push_back(where + "/p: missing or not a number");
        continue;
      }
      const double pv = p->get<double>();
      if (!(pv >= 0.0 && pv <= 1.0)) {
        std::ostringstream msg;
        msg << where << "/p: " << pv << " outside [0,1]";
        diags.push_back(msg.str());
        continue;
      }
      probs[idv] = pv;
    }
  }

  std::vector<Edge> edge_list;
  if (edges) {
    const long long n = static_cast<long long>(probs.size());
    for (std::size_t i = 0; i < edges->size(); ++i) {
      const auto& e = (*edges)[i];
      const std::string where = "/edges/" + std::to_string(i);
      if (!e.is_object()) {
        diags.push_back(where + ": must be an object");
        continue;
      }
      bool ok = true;
      for (const char* key : {"u", "v"}) {
        auto it = e.find(key);
        if (it == e.end() || !it->is_number_integer()) {
          diags.push_back(where + "/" + key + ": missing or not an integer");
          ok = false;
        } else if (it->get<long long>() < 0 || it->get<long long>() >= n) {
          diags.push_back(where + "/" + key + ": node " + std::to_string(it->get<long long>()) +
                          " does not exist");
          ok = false;
        }
      }
      auto cost = e.find("cost");
      if (cost == e.end() || !cost->is_number()) {
        diags.push_back(where + "/cost: missing or not a number");
        ok = false;
      } else if (!(cost->get<double>() > 0.0)) {
        diags.push_back(where + "/cost: must be positive");
        ok = false;
      }
      if (!ok) continue;
      const NodeId u = e["u"].get<NodeId>();
      const NodeId v = e["v"].get<NodeId>();
      if (u == v) {
        diags.push_back(where + ": self-loop at node " + std::to_string(u));
        continue;
      }
      edge_list.push_back({u, v, cost->get<double>()});
    }
  }

  NodeId start = 0;
  auto st = doc.find("start");
  if (st == doc.end() || !st->is_number_integer()) {
    diags.emplace_back("/start: missing or not an integer");
  } else {
    start = st->get<NodeId>();
    if (start < 0 || start >= static_cast<NodeId>(probs.size())) {
      diags.push_back("/start: node " + std::to_string(start) + " does not exist");
    }
  }

  if (!diags.empty()) throw InstanceFormatError(std::move(diags));
  ProblemInstance inst(std::move(probs), std::move(edge_list), start);
  auto violations = validate_instance(inst);
  if (!violations.empty()) throw InstanceFormatError(std::move(violations));
  return inst;
}

ProblemInstance parse_instance(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw InstanceFormatError(
        {"line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what()});
  }
  return instance_from_json(doc);
}

ProblemInstance load_instance(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open instance file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_instance(buf.str());
}

void save_instance(const ProblemInstance& inst, const std::filesystem::path& file,
                   const nlohmann::json& extra) {
  auto doc = instance_to_json(inst);
  for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << std::setprecision(17) << doc.dump(1) << "\n";
}

nlohmann::json path_to_json(const Path& path) { return nlohmann::json(path); }

}  // namespace expcost
