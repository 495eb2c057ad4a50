#include "streamstat/snapshot.hpp"

#include <string>

#include "streamstat/error.hpp"
#include "streamstat/json_util.hpp"

namespace streamstat::snapshot {

using json_util::field;
using json_util::from_double;
using json_util::from_matrix;
using json_util::from_vector;
using json_util::to_double;
using json_util::to_matrix;
using json_util::to_vector;

namespace {

void check_square(const Matrix& m, std::size_t p, const char* name) {
  if (static_cast<std::size_t>(m.rows()) != p || static_cast<std::size_t>(m.cols()) != p) {
    fail(ErrorCode::CorruptSnapshot, std::string(name) + " is not p x p");
  }
}

void check_length(const Vector& v, std::size_t p, const char* name) {
  if (static_cast<std::size_t>(v.size()) != p) fail(ErrorCode::CorruptSnapshot, std::string(name) + " is not length p");
}

std::size_t get_count(const nlohmann::json& j, const char* key) {
  const auto& f = field(j, key);
  if (!f.is_number_unsigned()) fail(ErrorCode::CorruptSnapshot, std::string(key) + " must be a non-negative integer");
  return f.get<std::size_t>();
}

bool get_flag(const nlohmann::json& j, const char* key) {
  const auto& f = field(j, key);
  if (!f.is_boolean()) fail(ErrorCode::CorruptSnapshot, std::string(key) + " must be a boolean");
  return f.get<bool>();
}

}  // namespace

nlohmann::json to_json(const lm::LmState& s) {
  nlohmann::json j{{"p", s.p},
                   {"v", from_matrix(s.v)},
                   {"w", from_vector(s.w)},
                   {"beta", from_vector(s.beta)},
                   {"beta_available", s.beta_available},
                   {"sse", from_double(s.sse)},
                   {"n_total", s.n_total},
                   {"s_yy", from_double(s.s_yy)},
                   {"s_y", from_double(s.s_y)},
                   {"chunks_seen", s.chunks_seen}};
  j["ridge"] = s.ridge ? nlohmann::json{{"lambda", from_double(s.ridge->lambda)}, {"active", s.ridge->active}}
                       : nlohmann::json(nullptr);
  return j;
}

lm::LmState lm_state_from_json(const nlohmann::json& j) {
  lm::LmState s;
  s.p = get_count(j, "p");
  s.v = to_matrix(field(j, "v"));
  s.w = to_vector(field(j, "w"));
  s.beta = to_vector(field(j, "beta"));
  check_square(s.v, s.p, "v");
  check_length(s.w, s.p, "w");
  check_length(s.beta, s.p, "beta");
  s.beta_available = get_flag(j, "beta_available");
  s.sse = to_double(field(j, "sse"));
  s.n_total = get_count(j, "n_total");
  s.s_yy = to_double(field(j, "s_yy"));
  s.s_y = to_double(field(j, "s_y"));
  s.chunks_seen = get_count(j, "chunks_seen");
  const auto& ridge = field(j, "ridge");
  if (!ridge.is_null()) s.ridge = lm::Ridge{to_double(field(ridge, "lambda")), get_flag(ridge, "active")};
  return s;
}

nlohmann::json to_json(const ee::CeeState& s) {
  return nlohmann::json{{"p", s.p},
                        {"a_cum", from_matrix(s.a_cum)},
                        {"beta", from_vector(s.beta)},
                        {"v", from_matrix(s.v)},
                        {"beta_available", s.beta_available},
                        {"chunks_seen", s.chunks_seen},
                        {"n_total", s.n_total}};
}

ee::CeeState cee_state_from_json(const nlohmann::json& j) {
  ee::CeeState s;
  s.p = get_count(j, "p");
  s.a_cum = to_matrix(field(j, "a_cum"));
  s.beta = to_vector(field(j, "beta"));
  s.v = to_matrix(field(j, "v"));
  check_square(s.a_cum, s.p, "a_cum");
  check_square(s.v, s.p, "v");
  check_length(s.beta, s.p, "beta");
  s.beta_available = get_flag(j, "beta_available");
  s.chunks_seen = get_count(j, "chunks_seen");
  s.n_total = get_count(j, "n_total");
  return s;
}

nlohmann::json to_json(const ee::CueeState& s) {
  return nlohmann::json{{"p", s.p},
                        {"a_tilde_cum", from_matrix(s.a_tilde_cum)},
                        {"a_vec", from_vector(s.a_vec)},
                        {"b_vec", from_vector(s.b_vec)},
                        {"beta_check", from_vector(s.beta_check)},
                        {"beta_tilde", from_vector(s.beta_tilde)},
                        {"v_tilde", from_matrix(s.v_tilde)},
                        {"beta_available", s.beta_available},
                        {"chunks_seen", s.chunks_seen},
                        {"n_total", s.n_total}};
}

ee::CueeState cuee_state_from_json(const nlohmann::json& j) {
  ee::CueeState s;
  s.p = get_count(j, "p");
  s.a_tilde_cum = to_matrix(field(j, "a_tilde_cum"));
  s.a_vec = to_vector(field(j, "a_vec"));
  s.b_vec = to_vector(field(j, "b_vec"));
  s.beta_check = to_vector(field(j, "beta_check"));
  s.beta_tilde = to_vector(field(j, "beta_tilde"));
  s.v_tilde = to_matrix(field(j, "v_tilde"));
  check_square(s.a_tilde_cum, s.p, "a_tilde_cum");
  check_square(s.v_tilde, s.p, "v_tilde");
  check_length(s.a_vec, s.p, "a_vec");
  check_length(s.b_vec, s.p, "b_vec");
  check_length(s.beta_check, s.p, "beta_check");
  check_length(s.beta_tilde, s.p, "beta_tilde");
  s.beta_available = get_flag(j, "beta_available");
  s.chunks_seen = get_count(j, "chunks_seen");
  s.n_total = get_count(j, "n_total");
  return s;
}

}  // namespace streamstat::snapshot
