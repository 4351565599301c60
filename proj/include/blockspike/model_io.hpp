#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "blockspike/errors.hpp"
#include "blockspike/model.hpp"

namespace blockspike {

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p, bool binary) {
  std::ofstream f(p, binary ? std::ios::binary : std::ios::out);
  if (!f) throw resource_error("cannot open " + p.string() + " for writing");
  return f;
}

inline std::ifstream open_in(const std::filesystem::path& p, bool binary) {
  std::ifstream f(p, binary ? std::ios::binary : std::ios::in);
  if (!f) throw resource_error("cannot open " + p.string() + " for reading");
  return f;
}

inline void put_u64(std::ofstream& f, std::uint64_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint64_t get_u64(std::ifstream& f) {
  std::uint64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) throw config_error("truncated instance dump");
  return v;
}

inline void put_doubles(std::ofstream& f, const double* p, size_t count) {
  f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

inline void get_doubles(std::ifstream& f, double* p, size_t count) {
  f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
  if (!f) throw config_error("truncated instance dump");
}

constexpr std::uint64_t kInstanceMagic = 0x4253504b494e5354ull;  // "BSPKINST"

}  // namespace detail

// Single-file little-endian dump: dims, then truth, side (flagged), and all
// blocks row-major. Round-trips bitwise.
inline void save_observations_binary(const Observations& obs, const std::filesystem::path& path) {
  auto f = detail::open_out(path, true);
  const size_t K = obs.truth.size();
  detail::put_u64(f, detail::kInstanceMagic);
  detail::put_u64(f, 1);  // format version
  detail::put_u64(f, K);
  for (size_t k = 0; k < K; ++k) detail::put_u64(f, static_cast<std::uint64_t>(obs.truth[k].size()));
  for (size_t k = 0; k < K; ++k) detail::put_u64(f, obs.side[k].size() > 0 ? 1 : 0);
  for (size_t k = 0; k < K; ++k)
    detail::put_doubles(f, obs.truth[k].data(), static_cast<size_t>(obs.truth[k].size()));
  for (size_t k = 0; k < K; ++k)
    if (obs.side[k].size() > 0)
      detail::put_doubles(f, obs.side[k].data(), static_cast<size_t>(obs.side[k].size()));
  for (size_t k = 0; k < K; ++k)
    for (size_t l = 0; l < K; ++l) {
      // Eigen stores column-major; dump row-major as documented
      const Eigen::MatrixXd bt = obs.blocks[k][l].transpose();
      detail::put_doubles(f, bt.data(), static_cast<size_t>(bt.size()));
    }
  if (!f) throw resource_error("write failed for " + path.string());
}

inline Observations load_observations_binary(const std::filesystem::path& path) {
  auto f = detail::open_in(path, true);
  if (detail::get_u64(f) != detail::kInstanceMagic) throw config_error("not an instance dump");
  if (detail::get_u64(f) != 1) throw config_error("unsupported instance dump version");
  const size_t K = detail::get_u64(f);
  if (K == 0 || K > 64) throw config_error("implausible group count in dump");
  std::vector<long> n(K);
  for (size_t k = 0; k < K; ++k) n[k] = static_cast<long>(detail::get_u64(f));
  std::vector<bool> has_side(K);
  for (size_t k = 0; k < K; ++k) has_side[k] = detail::get_u64(f) != 0;
  Observations obs;
  obs.truth.resize(K);
  obs.side.resize(K);
  obs.blocks.assign(K, std::vector<Eigen::MatrixXd>(K));
  for (size_t k = 0; k < K; ++k) {
    obs.truth[k].resize(n[k]);
    detail::get_doubles(f, obs.truth[k].data(), static_cast<size_t>(n[k]));
  }
  for (size_t k = 0; k < K; ++k)
    if (has_side[k]) {
      obs.side[k].resize(n[k]);
      detail::get_doubles(f, obs.side[k].data(), static_cast<size_t>(n[k]));
    }
  for (size_t k = 0; k < K; ++k)
    for (size_t l = 0; l < K; ++l) {
      Eigen::MatrixXd bt(n[l], n[k]);
      detail::get_doubles(f, bt.data(), static_cast<size_t>(bt.size()));
      obs.blocks[k][l] = bt.transpose();
    }
  return obs;
}

// CSV dump as three long-format files in a directory; headers name the block
// indices so the files stand alone.
inline void save_observations_csv(const Observations& obs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const size_t K = obs.truth.size();
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  {
    auto f = detail::open_out(dir / "blocks.csv", false);
    f << "block_row,block_col,i,j,value\n";
    for (size_t k = 0; k < K; ++k)
      for (size_t l = 0; l < K; ++l) {
        const auto& Y = obs.blocks[k][l];
        for (Eigen::Index i = 0; i < Y.rows(); ++i)
          for (Eigen::Index j = 0; j < Y.cols(); ++j)
            f << k << ',' << l << ',' << i << ',' << j << ',' << fmt(Y(i, j)) << '\n';
      }
    if (!f) throw resource_error("write failed in " + dir.string());
  }
  {
    auto f = detail::open_out(dir / "side.csv", false);
    f << "group,i,value\n";
    for (size_t k = 0; k < K; ++k)
      for (Eigen::Index i = 0; i < obs.side[k].size(); ++i)
        f << k << ',' << i << ',' << fmt(obs.side[k](i)) << '\n';
  }
  {
    auto f = detail::open_out(dir / "truth.csv", false);
    f << "group,i,value\n";
    for (size_t k = 0; k < K; ++k)
      for (Eigen::Index i = 0; i < obs.truth[k].size(); ++i)
        f << k << ',' << i << ',' << fmt(obs.truth[k](i)) << '\n';
  }
}

inline Observations load_observations_csv(const std::filesystem::path& dir) {
  struct Entry {
    long k, l, i, j;
    double v;
  };
  auto parse = [](const std::filesystem::path& p, bool block_file) {
    auto f = detail::open_in(p, false);
    std::string line;
    if (!std::getline(f, line)) throw config_error("empty csv " + p.string());
    std::vector<Entry> out;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      Entry e{0, 0, 0, 0, 0.0};
      const int want = block_file ? 5 : 3;
      const int got = block_file
                          ? std::sscanf(line.c_str(), "%ld,%ld,%ld,%ld,%lf", &e.k, &e.l, &e.i, &e.j, &e.v)
                          : std::sscanf(line.c_str(), "%ld,%ld,%lf", &e.k, &e.i, &e.v);
      if (got != want) throw config_error("bad csv row in " + p.string() + ": " + line);
      out.push_back(e);
    }
    return out;
  };
  const auto blocks = parse(dir / "blocks.csv", true);
  const auto side = parse(dir / "side.csv", false);
  const auto truth = parse(dir / "truth.csv", false);
  if (truth.empty()) throw config_error("truth.csv has no rows");
  long K = 0;
  std::vector<long> n;
  for (const auto& e : truth) {
    K = std::max(K, e.k + 1);
    if (static_cast<long>(n.size()) < e.k + 1) n.resize(e.k + 1, 0);
    n[e.k] = std::max(n[e.k], e.i + 1);
  }
  Observations obs;
  obs.truth.resize(K);
  obs.side.resize(K);
  obs.blocks.assign(K, std::vector<Eigen::MatrixXd>(K));
  for (long k = 0; k < K; ++k) {
    obs.truth[k] = Eigen::VectorXd::Zero(n[k]);
    for (long l = 0; l < K; ++l) obs.blocks[k][l] = Eigen::MatrixXd::Zero(n[k], n[l]);
  }
  for (const auto& e : truth) obs.truth[e.k](e.i) = e.v;
  for (const auto& e : side) {
    if (e.k >= K) throw config_error("side.csv group out of range");
    if (obs.side[e.k].size() == 0) obs.side[e.k] = Eigen::VectorXd::Zero(n[e.k]);
    obs.side[e.k](e.i) = e.v;
  }
  for (const auto& e : blocks) {
    if (e.k >= K || e.l >= K || e.i >= n[e.k] || e.j >= n[e.l])
      throw config_error("blocks.csv index out of range");
    obs.blocks[e.k][e.l](e.i, e.j) = e.v;
  }
  return obs;
}

}  // namespace blockspike
