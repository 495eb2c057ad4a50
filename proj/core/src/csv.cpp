#include "streamstat/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <utility>

#include "streamstat/error.hpp"

namespace streamstat::io {

namespace {

std::string location(std::size_t line) { return "line " + std::to_string(line); }

bool is_na_marker(std::string_view s) {
  static constexpr std::string_view kMarkers[] = {"NA", "N/A", "na", "NaN", "nan", "NAN", "null", "NULL", "."};
  return std::find(std::begin(kMarkers), std::end(kMarkers), s) != std::end(kMarkers);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  int c = in_.get();
  if (c == std::char_traits<char>::eof()) return false;
  record_line_ = line_;
  std::string cell;
  bool quoted = false;
  bool after_quote = false;
  for (;; c = in_.get()) {
    if (c == std::char_traits<char>::eof()) {
      if (quoted) fail(ErrorCode::ParseError, location(record_line_) + ": unterminated quoted field");
      fields.push_back(std::move(cell));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          cell.push_back('"');
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (ch == '\n') ++line_;
        cell.push_back(ch);
      }
      continue;
    }
    if (ch == ',') {
      fields.push_back(std::move(cell));
      cell.clear();
      after_quote = false;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && in_.peek() == '\n') in_.get();
      ++line_;
      fields.push_back(std::move(cell));
      return true;
    } else if (ch == '"' && cell.empty() && !after_quote) {
      quoted = true;
    } else if (after_quote) {
      fail(ErrorCode::ParseError, location(line_) + ": text after closing quote");
    } else {
      cell.push_back(ch);
    }
  }
}

double parse_cell(std::string_view cell, std::size_t line, std::string_view column) {
  const std::string_view s = trim(cell);
  const std::string where = location(line) + ", column '" + std::string(column) + "'";
  if (s.empty()) fail(ErrorCode::ParseError, where + ": empty cell");
  if (is_na_marker(s)) fail(ErrorCode::ParseError, where + ": missing value '" + std::string(s) + "'");
  std::string_view digits = s;
  if (digits.front() == '+') digits.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    fail(ErrorCode::ParseError, where + ": not a number '" + std::string(s) + "'");
  }
  if (!std::isfinite(v)) fail(ErrorCode::ParseError, where + ": non-finite value '" + std::string(s) + "'");
  return v;
}

ChunkSource::ChunkSource(std::istream& in, ColumnSelection selection, std::size_t chunk_size)
    : reader_(in), selection_(std::move(selection)), chunk_size_(chunk_size) {
  if (chunk_size_ == 0) fail(ErrorCode::InvalidConfig, "chunk_size must be >= 1");
  std::vector<std::string> header;
  if (!reader_.next(header)) fail(ErrorCode::SchemaMismatch, "input has no header row");
  for (auto& h : header) h = std::string(trim(h));
  header_width_ = header.size();
  auto find = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorCode::SchemaMismatch, "input has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  response_idx_ = find(selection_.response);
  for (const auto& c : selection_.covariates) covariate_idx_.push_back(find(c));
}

void ChunkSource::skip_rows(std::size_t n) {
  const std::size_t target = rows_read_ + n;
  while (rows_read_ < target) {
    if (!reader_.next(fields_)) {
      fail(ErrorCode::SchemaMismatch, "input ends after " + std::to_string(rows_read_) +
                                          " rows but the snapshot consumed " + std::to_string(target));
    }
    if (fields_.size() == 1 && trim(fields_[0]).empty()) continue;
    ++rows_read_;
  }
}

std::optional<Chunk> ChunkSource::next() {
  const std::size_t width = covariate_idx_.size() + (selection_.intercept ? 1 : 0);
  std::vector<double> xs;
  std::vector<double> ys;
  Chunk chunk;
  chunk.first_row = rows_read_;
  while (ys.size() < chunk_size_ && reader_.next(fields_)) {
    const std::size_t line = reader_.record_line();
    if (fields_.size() == 1 && trim(fields_[0]).empty()) continue;  // blank line
    if (ys.empty()) chunk.first_line = line;
    if (fields_.size() != header_width_) {
      fail(ErrorCode::ParseError, location(line) + ": expected " + std::to_string(header_width_) + " fields, got " +
                                      std::to_string(fields_.size()));
    }
    if (selection_.intercept) xs.push_back(1.0);
    for (std::size_t j = 0; j < covariate_idx_.size(); ++j) {
      xs.push_back(parse_cell(fields_[covariate_idx_[j]], line, selection_.covariates[j]));
    }
    ys.push_back(parse_cell(fields_[response_idx_], line, selection_.response));
    ++rows_read_;
  }
  if (ys.empty()) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(ys.size());
  chunk.x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      xs.data(), n, static_cast<Eigen::Index>(width));
  chunk.y = Eigen::Map<const Vector>(ys.data(), n);
  return chunk;
}

PipelinedChunkSource::PipelinedChunkSource(ChunkSource& source, std::size_t capacity)
    : source_(source), capacity_(std::max<std::size_t>(1, capacity)) {
  worker_ = std::jthread([this](std::stop_token stop) { produce(stop); });
}

PipelinedChunkSource::~PipelinedChunkSource() {
  worker_.request_stop();
  cv_.notify_all();
}

void PipelinedChunkSource::produce(std::stop_token stop) {
  try {
    while (!stop.stop_requested()) {
      std::optional<Chunk> c = source_.next();
      std::unique_lock lock(mutex_);
      if (!c) break;
      cv_.wait(lock, stop, [&] { return queue_.size() < capacity_; });
      if (stop.stop_requested()) return;
      queue_.push_back(std::move(*c));
      cv_.notify_all();
    }
  } catch (...) {
    std::lock_guard lock(mutex_);
    error_ = std::current_exception();
  }
  std::lock_guard lock(mutex_);
  done_ = true;
  cv_.notify_all();
}

std::optional<Chunk> PipelinedChunkSource::next() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return !queue_.empty() || done_; });
  if (!queue_.empty()) {
    Chunk c = std::move(queue_.front());
    queue_.pop_front();
    cv_.notify_all();
    return c;
  }
  if (error_) std::rethrow_exception(error_);
  return std::nullopt;
}

}  // namespace streamstat::io
