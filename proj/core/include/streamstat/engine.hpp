#pragma once

// Chunk-at-a-time driver shared by the CLI and the simulation runners.

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "streamstat/ee_stream.hpp"
#include "streamstat/lm_diag.hpp"
#include "streamstat/lm_stream.hpp"
#include "streamstat/model_config.hpp"

namespace streamstat::engine {

using EngineState = std::variant<lm::LmState, ee::CeeState, ee::CueeState>;

struct ChunkOutcome {
  bool absorbed = false;  // false when the rows were held back for merging
  std::optional<diag::DiagnosticReport> report;
};

class StreamEngine {
 public:
  explicit StreamEngine(ModelConfig config);

  /// Rebuilds an engine from snapshot JSON using the config stored inside it.
  static StreamEngine from_snapshot(const nlohmann::json& snap);
  /// As from_snapshot, but throws SchemaMismatch unless the snapshot was
  /// written under `config`.
  static StreamEngine resume(const nlohmann::json& snap, const ModelConfig& config);

  /// LM: diagnostics against the state before the chunk, then the update.
  /// EE: a chunk whose fit separates or fails to converge is held and merged
  /// with the next one.
  ChunkOutcome process_chunk(const Matrix& x, const Vector& y);

  /// End of input: rows still held for merging are dropped with a warning.
  void finish();

  nlohmann::json snapshot() const;

  const ModelConfig& config() const { return config_; }
  const EngineState& state() const { return state_; }
  std::size_t rows_consumed() const { return rows_consumed_; }
  std::size_t pending_rows() const { return static_cast<std::size_t>(pending_y_.size()); }
  bool singular() const;
  const std::vector<diag::DiagnosticReport>& diagnostics() const { return reports_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  ChunkOutcome process_lm(const Matrix& x, const Vector& y);
  ChunkOutcome process_ee(const Matrix& x, const Vector& y);
  std::optional<diag::DiagnosticReport> diagnose(const lm::LmState& prev, const Matrix& x, const Vector& y) const;

  ModelConfig config_;
  std::optional<ee::Family> family_;
  EngineState state_;
  std::size_t rows_consumed_ = 0;
  Matrix pending_x_;
  Vector pending_y_;
  std::vector<diag::DiagnosticReport> reports_;
  std::vector<std::string> warnings_;
};

}  // namespace streamstat::engine
