#include "restorl/judge.hpp"

#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include <httplib.h>

#include <cctype>
#include <iostream>
#include <mutex>
#include <regex>

#include "json.hpp"
#include "restorl/image_io.hpp"

namespace restorl {

namespace {

const std::string kPrompt = R"(You are an image-restoration expert. You will be given three images:
1. The degraded input that suffers from a certain type of degradation.
2. The restored output generated by a model.
3. The clean ground-truth reference.

Task:
1. Identify the most plausible degradation type of the input image. Consider categories such as denoising (0/1/2, different noise levels), deraining (3), dehazing (4), deblurring (5), or low-light enhancement (6). Briefly justify your reasoning.
2. Compare the restored output against the ground truth with respect to the identified degradation type. Pay attention to:
   - Noise or streak removal quality for denoising/deraining.
   - Contrast and haze removal for dehazing.
   - Sharpness recovery for deblurring.
   - Exposure and color constancy for low-light enhancement.
3. Highlight specific improvements and any remaining artifacts.
4. Provide a final quality score from 1 to 5, where:
   - 1: severe artifacts or almost no improvement,
   - 2: minor improvement but significant issues remain,
   - 3: moderate improvement with noticeable gaps,
   - 4: strong restoration with only small flaws,
   - 5: near-perfect restoration indistinguishable from ground truth.

Respond in the following XML-style format:
<Assessment>
  <Degradation>
    [type and reasoning]
  </Degradation>
  <Analysis>
    [detailed comparison]
  </Analysis>
  <Score>X</Score>
</Assessment>
)";

// First occurrence of <Tag>...</Tag>; empty optional-ish pair when absent.
bool extract_section(const std::string& text, const std::string& tag, std::string* out) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  const auto start = text.find(open);
  if (start == std::string::npos) return false;
  const auto body = start + open.size();
  const auto end = text.find(close, body);
  if (end == std::string::npos) return false;
  *out = text.substr(body, end - body);
  return true;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// splits "http://host:port/path" into (host-port base, path)
std::pair<std::string, std::string> split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw std::invalid_argument("judge endpoint must look like http://host:port[/path], got " +
                                url);
  }
  std::string path = m[2].matched ? m[2].str() : "/";
  return {m[1].str(), path};
}

}  // namespace

const std::string& build_prompt() { return kPrompt; }

JudgeRequest make_judge_request(Image degraded, Image restored, Image reference) {
  JudgeRequest req;
  req.degraded = std::move(degraded);
  req.restored = std::move(restored);
  req.reference = std::move(reference);
  req.prompt = kPrompt;
  return req;
}

JudgeVerdict parse_verdict(const std::string& response) {
  static const std::regex score_re(R"(<Score>\s*([+-]?[0-9]+)\s*</Score>)");
  std::smatch m;
  if (!std::regex_search(response, m, score_re)) {
    throw JudgeParseError("no parsable <Score> tag in judge response");
  }
  const int score = std::stoi(m[1].str());
  if (score < 1 || score > 5) {
    throw JudgeRangeError("judge score " + std::to_string(score) + " outside 1..5");
  }

  JudgeVerdict v;
  v.score = score;
  v.rescaled = (score - 1) / 4.0;

  std::string section;
  if (extract_section(response, "Degradation", &section)) {
    // first integer token in the section, accepted when it is a 0..6 label
    static const std::regex label_re(R"(([0-9]+))");
    std::smatch lm;
    if (std::regex_search(section, lm, label_re)) {
      const int label = std::stoi(lm[1].str());
      if (label >= 0 && label <= 6) v.degradation_label = label;
    }
  }
  if (extract_section(response, "Analysis", &section)) {
    v.analysis = trim(section);
  }
  return v;
}

std::string render_verdict(const JudgeVerdict& verdict) {
  std::string degradation = verdict.degradation_label >= 0
                                ? "label " + std::to_string(verdict.degradation_label)
                                : "unknown";
  std::string analysis = verdict.analysis.empty() ? "no analysis" : verdict.analysis;
  return "<Assessment>\n  <Degradation>\n    " + degradation +
         "\n  </Degradation>\n  <Analysis>\n    " + analysis +
         "\n  </Analysis>\n  <Score>" + std::to_string(verdict.score) +
         "</Score>\n</Assessment>\n";
}

JudgeVerdict mock_judge(const Image& restored, const Image& reference) {
  require_same_shape(restored, reference, "mock_judge");
  const double db = psnr(restored, reference);
  int score = 1;
  for (double threshold : {20.0, 25.0, 30.0, 35.0}) {
    if (db >= threshold) ++score;
  }
  JudgeVerdict v;
  v.score = score;
  v.rescaled = (score - 1) / 4.0;
  v.analysis = "mock verdict from psnr " + std::to_string(db) + " dB";
  return v;
}

std::string base64_encode(const std::string& bytes) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= bytes.size()) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.push_back(alphabet[(v >> 6) & 63]);
    out.push_back(alphabet[v & 63]);
    i += 3;
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.append("==");
  } else if (rest == 2) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.push_back(alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

// single connection-owning worker: callers serialize on the mutex and share
// one client
struct HttpJudge::Impl {
  Impl(const std::string& base, int timeout_ms) : client(base) {
    client.set_connection_timeout(0, timeout_ms * 1000);
    client.set_read_timeout(0, timeout_ms * 1000);
    client.set_write_timeout(0, timeout_ms * 1000);
  }
  std::mutex mutex;
  httplib::Client client;
};

HttpJudge::HttpJudge(JudgeEndpoint endpoint)
    : endpoint_(std::move(endpoint)),
      impl_(new Impl(split_url(endpoint_.url).first, endpoint_.timeout_ms)) {}

HttpJudge::~HttpJudge() { delete impl_; }

JudgeVerdict HttpJudge::evaluate(const JudgeRequest& request) {
  std::lock_guard<std::mutex> lock(impl_->mutex);

  const std::string path = split_url(endpoint_.url).second;
  const nlohmann::json body{
      {"prompt", request.prompt},
      {"images",
       {base64_encode(encode_png(request.degraded)),
        base64_encode(encode_png(request.restored)),
        base64_encode(encode_png(request.reference))}}};
  const std::string payload = body.dump();

  const int attempts = std::max(1, endpoint_.retries);
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    auto res = impl_->client.Post(path, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    try {
      return parse_verdict(res->body);
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }

  std::cerr << "[judge] endpoint " << endpoint_.url << " failed after " << attempts
            << " attempt(s) (" << last_error << "); falling back to mock verdict\n";
  JudgeVerdict v = mock_judge(request.restored, request.reference);
  v.fallback = true;
  return v;
}

JudgeVerdict http_judge(const JudgeEndpoint& endpoint, const JudgeRequest& request) {
  HttpJudge judge(endpoint);
  return judge.evaluate(request);
}

}  // namespace restorl
