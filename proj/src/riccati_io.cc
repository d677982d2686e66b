#include <stdexcept>

#include "memlq/riccati.h"

namespace memlq {

using Eigen::MatrixXd;
using nlohmann::json;

namespace {

json ToRows(const MatrixXd& M) {
  json rows = json::array();
  for (int r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd FromRows(const json& j, int rows, int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw std::invalid_argument("triplet JSON: matrix row count mismatch");
  }
  MatrixXd M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) {
      throw std::invalid_argument("triplet JSON: matrix column count mismatch");
    }
    for (int c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
  }
  return M;
}

}  // namespace

json triplet_to_json(const RiccatiTriplet& trip) {
  const int m = trip.m;
  json P0 = json::array(), P1 = json::array(), P2 = json::array();
  for (int i = 0; i <= trip.N(); ++i) {
    P0.push_back(ToRows(trip.P0(i)));
    json p1 = json::array(), p2 = json::array();
    for (int p = 0; p <= i; ++p) {
      p1.push_back(ToRows(trip.levels[i].P1.middleCols(p * m, m)));
      json row = json::array();
      for (int q = 0; q <= i; ++q) row.push_back(ToRows(trip.P2(i, p, q)));
      p2.push_back(std::move(row));
    }
    P1.push_back(std::move(p1));
    P2.push_back(std::move(p2));
  }
  json meta = {{"method", to_string(trip.method)},
               {"N", trip.N()},
               {"n", trip.n},
               {"m", trip.m}};
  return {{"P0", P0}, {"P1", P1}, {"P2", P2}, {"meta", meta}};
}

RiccatiTriplet triplet_from_json(const json& j) {
  const json& meta = j.at("meta");
  const int N = meta.at("N").get<int>();
  const int n = meta.at("n").get<int>();
  const int m = meta.at("m").get<int>();
  RiccatiTriplet trip = RiccatiTriplet::Zero(
      n, m, N, parse_riccati_method(meta.at("method").get<std::string>()));
  for (int i = 0; i <= N; ++i) {
    RiccatiLevel& L = trip.levels[i];
    L.P0 = FromRows(j.at("P0").at(i), n, n);
    for (int p = 0; p <= i; ++p) {
      L.P1.middleCols(p * m, m) = FromRows(j.at("P1").at(i).at(p), n, m);
      for (int q = 0; q <= i; ++q) {
        L.P2.block(q * m, p * m, m, m) =
            FromRows(j.at("P2").at(i).at(p).at(q), m, m);
      }
    }
  }
  return trip;
}

json residual_to_json(const DreResidual& r) {
  return {{"max", {r.max[0], r.max[1], r.max[2]}},
          {"node", {r.node[0], r.node[1], r.node[2]}}};
}

}  // namespace memlq
