#pragma once

// RFC-4180 CSV ingestion in fixed-size row chunks.

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <istream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "streamstat/numkern.hpp"

namespace streamstat::io {

/// Record reader: quoted fields, doubled quotes, embedded newlines, CRLF.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next record into `fields`; false at end of input.
  bool next(std::vector<std::string>& fields);
  /// 1-based physical line on which the last record started.
  std::size_t record_line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

/// Strict decimal parse: empty cells, NA markers and non-finite values are
/// rejected with ParseError naming the line and column.
double parse_cell(std::string_view cell, std::size_t line, std::string_view column);

struct ColumnSelection {
  std::string response;
  std::vector<std::string> covariates;
  bool intercept = true;
};

struct Chunk {
  Matrix x;
  Vector y;
  std::size_t first_line = 0;
  std::size_t first_row = 0;  // 0-based data-row offset in the input
};

/// Splits the data rows into chunks of `chunk_size` rows; the last chunk may
/// be shorter. Missing columns raise SchemaMismatch on construction.
class ChunkSource {
 public:
  ChunkSource(std::istream& in, ColumnSelection selection, std::size_t chunk_size);

  /// Discards the next n data rows (used when resuming).
  void skip_rows(std::size_t n);
  std::optional<Chunk> next();

  std::size_t rows_read() const { return rows_read_; }

 private:
  CsvReader reader_;
  ColumnSelection selection_;
  std::size_t chunk_size_;
  std::vector<std::size_t> covariate_idx_;
  std::size_t response_idx_ = 0;
  std::size_t header_width_ = 0;
  std::size_t rows_read_ = 0;
  std::vector<std::string> fields_;
};

/// Parses chunks on a background thread, at most `capacity` ahead of the
/// consumer. Parse errors are rethrown from next().
class PipelinedChunkSource {
 public:
  PipelinedChunkSource(ChunkSource& source, std::size_t capacity);
  ~PipelinedChunkSource();
  PipelinedChunkSource(const PipelinedChunkSource&) = delete;
  PipelinedChunkSource& operator=(const PipelinedChunkSource&) = delete;

  std::optional<Chunk> next();

 private:
  void produce(std::stop_token stop);

  ChunkSource& source_;
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable_any cv_;
  std::deque<Chunk> queue_;
  bool done_ = false;
  std::exception_ptr error_;
  std::jthread worker_;
};

}  // namespace streamstat::io
