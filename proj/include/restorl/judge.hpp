#pragma once

#include <stdexcept>
#include <string>

#include "restorl/image.hpp"

namespace restorl {

class JudgeParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class JudgeRangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JudgeVerdict {
  int degradation_label = -1;  // 0..6, -1 when unknown
  std::string analysis;
  int score = 0;          // 1..5
  double rescaled = 0.0;  // (score - 1) / 4
  bool fallback = false;  // true when produced by the mock after endpoint failure
};

struct JudgeRequest {
  Image degraded;
  Image restored;
  Image reference;
  std::string prompt;  // always the verifier template, byte for byte
};

/// The fixed expert-verifier prompt (three images, 1-5 rubric, XML reply).
const std::string& build_prompt();

JudgeRequest make_judge_request(Image degraded, Image restored, Image reference);

/// Extracts the first <Score> integer (1..5 -> JudgeRangeError outside) and,
/// when present, the first 0..6 integer inside the <Degradation> section.
/// Missing or malformed <Score> raises JudgeParseError.
JudgeVerdict parse_verdict(const std::string& response);

/// Embeds a verdict back into the XML reply template; parse_verdict of the
/// result reproduces (degradation_label, score).
std::string render_verdict(const JudgeVerdict& verdict);

/// Deterministic stand-in for the expert model: score = 1 + number of
/// thresholds in {20, 25, 30, 35} dB that psnr(restored, reference) reaches.
JudgeVerdict mock_judge(const Image& restored, const Image& reference);

struct JudgeEndpoint {
  std::string url;          // e.g. http://127.0.0.1:8080/judge
  int timeout_ms = 2000;
  int retries = 2;          // total attempts; at least one is always made
};

/// POSTs {prompt, images: [base64 PNG x3]} to the endpoint and parses the
/// response text. Network or parse failure across all attempts falls back to
/// the mock verdict (flagged) after a stderr warning; it never throws for
/// endpoint trouble. Requests are serialized per instance.
class HttpJudge {
 public:
  explicit HttpJudge(JudgeEndpoint endpoint);
  ~HttpJudge();
  HttpJudge(const HttpJudge&) = delete;
  HttpJudge& operator=(const HttpJudge&) = delete;

  JudgeVerdict evaluate(const JudgeRequest& request);
  const JudgeEndpoint& endpoint() const { return endpoint_; }

 private:
  struct Impl;
  JudgeEndpoint endpoint_;
  Impl* impl_;
};

/// One-shot convenience wrapper around HttpJudge.
JudgeVerdict http_judge(const JudgeEndpoint& endpoint, const JudgeRequest& request);

std::string base64_encode(const std::string& bytes);

}  // namespace restorl
