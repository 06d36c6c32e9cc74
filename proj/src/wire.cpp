#include "airguard/wire.hpp"

#include <cmath>
#include <sstream>

#include "airguard/airflow.hpp"
#include "airguard/error.hpp"

namespace airguard::wire {

namespace {

bool known_opcode(std::uint8_t op) { return op >= 0x01 && op <= 0x03; }

void check_payload(Opcode op, std::uint8_t payload) {
  if (op == Opcode::SetDuty) {
    if (payload > kMaxDutyPayload)
      throw Error(ErrorCode::PayloadOutOfRange, "SET_DUTY payload " + std::to_string(payload) + " > 200");
  } else if (payload != 0) {
    throw Error(ErrorCode::PayloadOutOfRange, "STOP/PING payload must be 0x00");
  }
}

}  // namespace

CommandFrame set_duty_frame(std::uint8_t seq, double duty_pct) {
  const double q = airflow::quantize_duty(duty_pct);
  return CommandFrame{seq, Opcode::SetDuty, static_cast<std::uint8_t>(std::lround(q / airflow::kDutyStep))};
}

double frame_duty_pct(const CommandFrame& f) {
  return f.opcode == Opcode::SetDuty ? f.payload * airflow::kDutyStep : 0.0;
}

FrameBytes encode(const CommandFrame& frame) {
  const auto op = static_cast<std::uint8_t>(frame.opcode);
  if (!known_opcode(op)) throw Error(ErrorCode::UnknownOpcode, "opcode " + std::to_string(op));
  check_payload(frame.opcode, frame.payload);
  return {kHeader, frame.seq, op, frame.payload, static_cast<std::uint8_t>(frame.seq ^ op ^ frame.payload)};
}

std::optional<ErrorCode> frame_error(std::span<const std::uint8_t> bytes) noexcept {
  if (bytes.size() != kFrameSize) return ErrorCode::BadLength;
  if (bytes[0] != kHeader) return ErrorCode::BadHeader;
  if ((bytes[1] ^ bytes[2] ^ bytes[3]) != bytes[4]) return ErrorCode::BadChecksum;
  if (!known_opcode(bytes[2])) return ErrorCode::UnknownOpcode;
  if (static_cast<Opcode>(bytes[2]) == Opcode::SetDuty ? bytes[3] > kMaxDutyPayload : bytes[3] != 0)
    return ErrorCode::PayloadOutOfRange;
  return std::nullopt;
}

CommandFrame decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kFrameSize)
    throw Error(ErrorCode::BadLength, "frame has " + std::to_string(bytes.size()) + " bytes, expected 5");
  if (bytes[0] != kHeader) throw Error(ErrorCode::BadHeader, "header byte " + std::to_string(bytes[0]));
  if ((bytes[1] ^ bytes[2] ^ bytes[3]) != bytes[4]) throw Error(ErrorCode::BadChecksum, "checksum mismatch");
  if (!known_opcode(bytes[2])) throw Error(ErrorCode::UnknownOpcode, "opcode " + std::to_string(bytes[2]));
  const auto op = static_cast<Opcode>(bytes[2]);
  check_payload(op, bytes[3]);
  return CommandFrame{bytes[1], op, bytes[3]};
}

std::size_t valid_frame_count() { return (kMaxDutyPayload + 1 + 2) * 256; }

nlohmann::ordered_json to_json(const TelemetryRecord& r) {
  return nlohmann::ordered_json{{"t_ms", r.t_ms},
                        {"dist_m", r.dist_m},
                        {"state", std::string(safety::to_string(r.state))},
                        {"duty_pct", r.duty_pct},
                        {"seq", r.seq}};
}

TelemetryRecord telemetry_from_json(const nlohmann::ordered_json& j) {
  try {
    TelemetryRecord r;
    r.t_ms = j.at("t_ms").get<double>();
    r.dist_m = j.at("dist_m").get<double>();
    r.state = safety::parse_state(j.at("state").get<std::string>());
    r.duty_pct = j.at("duty_pct").get<double>();
    r.seq = j.at("seq").get<std::uint64_t>();
    if (!std::isfinite(r.t_ms) || !std::isfinite(r.dist_m) || !std::isfinite(r.duty_pct))
      throw Error(ErrorCode::MalformedRecord, "non-finite field");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedRecord) throw;
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
}

JournalWriter::JournalWriter(const std::filesystem::path& path, bool truncate)
    : path_(path), out_(path, truncate ? std::ios::binary | std::ios::trunc : std::ios::binary | std::ios::app) {
  if (!out_) throw Error(ErrorCode::IoFailure, "cannot open journal " + path.string());
}

void JournalWriter::append(const nlohmann::ordered_json& record) {
  out_ << record.dump() << '\n';
  if (!out_) throw Error(ErrorCode::IoFailure, "write failed on " + path_.string());
}

void JournalWriter::flush() {
  out_.flush();
  if (!out_) throw Error(ErrorCode::IoFailure, "flush failed on " + path_.string());
}

JournalContents read_journal(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open journal " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  JournalContents out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    ++line_no;
    if (nl == std::string::npos) {
      out.truncated_tail = true;
      break;
    }
    const std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw Error(ErrorCode::MalformedRecord, path.string() + " line " + std::to_string(line_no), line_no);
    out.records.push_back(std::move(j));
    out.line_numbers.push_back(line_no);
  }
  return out;
}

void journal_append(const std::filesystem::path& path, std::span<const TelemetryRecord> records) {
  JournalWriter w(path);
  for (const auto& r : records) w.append(r);
  w.flush();
}

TelemetryJournal journal_read(const std::filesystem::path& path) {
  const JournalContents raw = read_journal(path);
  TelemetryJournal out;
  out.truncated_tail = raw.truncated_tail;
  out.records.reserve(raw.records.size());
  for (std::size_t i = 0; i < raw.records.size(); ++i) {
    try {
      out.records.push_back(telemetry_from_json(raw.records[i]));
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRecord,
                  path.string() + " line " + std::to_string(raw.line_numbers[i]) + ": " + e.what(),
                  raw.line_numbers[i]);
    }
  }
  return out;
}

}  // namespace airguard::wire
