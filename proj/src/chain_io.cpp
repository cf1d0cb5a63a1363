#include "qsdlab/chain_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qsdlab/error.hpp"

namespace qsdlab::chain {

using nlohmann::json;

namespace {

ReducibleChain from_json(const json& j) {
  if (!j.is_object()) throw UsageError("chain JSON must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "n1" && key != "n2" && key != "Q") throw UsageError("unknown chain key '" + key + "'");
  }
  if (!j.contains("n1") || !j.contains("n2") || !j.contains("Q")) {
    throw UsageError("chain JSON needs n1, n2 and Q");
  }
  try {
    const int n1 = j.at("n1").get<int>();
    const int n2 = j.at("n2").get<int>();
    const auto& rows = j.at("Q");
    const int n = n1 + n2;
    if (n1 <= 0 || n2 <= 0 || !rows.is_array() || static_cast<int>(rows.size()) != n) {
      throw UsageError("chain matrix must have n1+n2 rows");
    }
    Matrix q(n, n);
    for (int i = 0; i < n; ++i) {
      const auto& row = rows[i];
      if (!row.is_array() || static_cast<int>(row.size()) != n) {
        throw UsageError("chain row " + std::to_string(i) + " must have n1+n2 entries");
      }
      for (int k = 0; k < n; ++k) q(i, k) = row[k].get<double>();
    }
    return make_chain(n1, n2, q);
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad chain JSON: ") + e.what());
  }
}

}  // namespace

ReducibleChain parse_chain_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("chain JSON does not parse: ") + e.what());
  }
  return from_json(j);
}

ReducibleChain load_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open chain file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_chain_json(buf.str());
}

std::string chain_to_json(const ReducibleChain& chain) {
  json rows = json::array();
  for (int i = 0; i < chain.size(); ++i) {
    json row = json::array();
    for (int k = 0; k < chain.size(); ++k) row.push_back(chain.Q(i, k));
    rows.push_back(row);
  }
  return json{{"n1", chain.n1}, {"n2", chain.n2}, {"Q", rows}}.dump();
}

}  // namespace qsdlab::chain
