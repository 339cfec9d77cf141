#ifndef ENSDIV_TOOLS_CLI_SUPPORT_HPP
#define ENSDIV_TOOLS_CLI_SUPPORT_HPP

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include <ensdiv/ensdiv.hpp>

namespace ensdiv::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int {
  kSuccess = 0,
  kFailure = 1,
  kInfeasible = 2,
  kInputError = 3,
  kSimulationSpecError = 4,
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::infeasible:
    case ErrorKind::degenerate_basis: return kInfeasible;
    case ErrorKind::pathological_spec: return kSimulationSpecError;
    case ErrorKind::numeric:
    case ErrorKind::estimator_failure:
    case ErrorKind::degenerate_trials: return kFailure;
    default: return kInputError;
  }
}

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::input, "cannot open '" + path + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

/// Provenance block embedded under "manifest" in every JSON output.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv)
      : command_(std::move(command)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

  void input(const std::string& path) { inputs_.push_back({{"path", path}, {"sha256", sha256_file(path)}}); }
  json& config() { return config_; }

  json finish() const {
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return json{{"command", command_},   {"argv", argv_},           {"config", config_},
                {"inputs", inputs_},     {"version", ENSDIV_VERSION}, {"rng", kRngVersion},
                {"duration_seconds", seconds}};
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  json config_ = json::object();
  json inputs_ = json::array();
  std::chrono::steady_clock::time_point start_;
};

inline void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::input, "cannot write '" + path + "'");
  out << text;
}

inline void write_json(const std::string& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

inline json to_json(const WeightSolution& s) {
  json j{{"mode", to_string(s.mode)}, {"w", s.w}, {"sum", s.sum()}, {"norm_sq", s.norm_sq},
         {"gamma_residuals", s.gamma_residuals}};
  if (s.epsilon) {
    j["epsilon"] = *s.epsilon;
    j["scaled_residuals"] = s.scaled_residuals;
  }
  return j;
}

inline json to_json(const EnsembleEstimate& e) {
  return json{{"estimate", e.value},
              {"per_l", e.per_l},
              {"l_bar", e.l_bar},
              {"k", e.k_values},
              {"weights", to_json(e.weights)},
              {"n_eval", e.n_eval},
              {"m1", e.m1},
              {"m2", e.m2},
              {"diagnostics",
               {{"ratio_clamps", e.diagnostics.ratio_clamps}, {"distance_clamps", e.diagnostics.distance_clamps}}}};
}

inline json to_json(const BootstrapResult& b) {
  return json{{"replicates", b.replicates.size()}, {"failures", b.failures}, {"level", b.level},
              {"method", to_string(b.method)},     {"point", b.point},       {"ci", {b.ci_low, b.ci_high}},
              {"sd", b.stddev()}};
}

}  // namespace ensdiv::cli

#endif  // ENSDIV_TOOLS_CLI_SUPPORT_HPP
