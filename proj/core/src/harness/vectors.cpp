#include "gsa/harness/vectors.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gsa/errors.hpp"
#include "gsa/protocol.hpp"

namespace gsa::harness {

using nlohmann::json;
using namespace gsa::ibdt;
namespace fs = std::filesystem;

namespace {

const char* const kFiles[] = {"params.json", "keys.json", "signatures.json", "messages.json", "frames.json"};

std::string hex(ByteView b) { return to_hex(b); }

Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& p, std::string_view text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("write failed for " + p.string());
}

json message_json(const protocol::AccreditationMessage& m) {
  return {{"ticket_id", hex(m.ticket.ticket_id)},
          {"verifier_id", m.ticket.verifier_id},
          {"issued_at", m.ticket.issued_at},
          {"validity_window", m.ticket.validity_window},
          {"service_terms", m.ticket.service_terms},
          {"pseudonyms", m.pseudonyms},
          {"encoding", hex(protocol::canonical_encode(m))}};
}

protocol::AccreditationMessage message_from(const json& j) {
  protocol::AccreditationMessage m;
  const auto id = from_hex(j.at("ticket_id").get<std::string>());
  if (id.size() != m.ticket.ticket_id.size()) throw ParseError("ticket id must be 16 bytes");
  std::copy(id.begin(), id.end(), m.ticket.ticket_id.begin());
  m.ticket.verifier_id = j.at("verifier_id").get<std::string>();
  m.ticket.issued_at = j.at("issued_at").get<std::int64_t>();
  m.ticket.validity_window = j.at("validity_window").get<std::int64_t>();
  m.ticket.service_terms = j.at("service_terms").get<std::string>();
  m.pseudonyms = j.at("pseudonyms").get<std::vector<std::string>>();
  return m;
}

}  // namespace

std::vector<fs::path> emit_vectors(const fs::path& out_dir, std::uint64_t seed) {
  fs::create_directories(out_dir);
  Rng rng(seed);
  Rng setup_rng = rng.fork("setup");
  Rng sign_rng = rng.fork("sign");
  const std::size_t n_max = 4;
  auto sr = setup(kSupportedLambda, IdentityUniverse::decimal_digits(), n_max, setup_rng);

  json params = {{"seed", seed}, {"lambda", kSupportedLambda}, {"n_max", n_max},
                 {"pms", hex(sr.pms.serialize())}, {"mpk", hex(sr.keys.mpk.serialize())}};

  std::map<std::string, IdentitySecretKey> keys;
  json keys_json = json::array();
  for (const char* id : {"18", "27", "36", "45"}) {
    keys[id] = keygen(sr.pms, sr.keys.mpk, sr.keys.msk, id);
    keys_json.push_back({{"identity", id}, {"key", hex(keys[id].serialize())}});
  }

  protocol::AccreditationMessage golden;
  golden.ticket.verifier_id = "gate-1";
  golden.ticket.validity_window = 60;
  golden.pseudonyms = {"18", "27"};
  protocol::AccreditationMessage second = golden;
  second.ticket.ticket_id.fill(0xab);
  second.ticket.issued_at = 1700000000;
  second.ticket.service_terms = "hov-lane";
  second.pseudonyms = {"18", "27", "36", "45"};
  json messages = json::array({message_json(golden), message_json(second)});

  json sigs = json::array();
  std::vector<std::pair<protocol::AccreditationMessage, CombinedSignature>> signed_msgs;
  for (const auto& msg : {golden, second, protocol::AccreditationMessage{golden.ticket, {"36"}}}) {
    const auto bytes = protocol::canonical_encode(msg);
    const auto gamma = msg.policy();
    std::vector<PartialSignature> partials;
    json partial_hex = json::array();
    for (const auto& id : gamma.members) {
      partials.push_back(sign(sr.pms, sr.keys.mpk, keys.at(id), bytes, gamma, sign_rng));
      partial_hex.push_back(hex(partials.back().serialize()));
    }
    const auto sigma = comb(sr.pms, sr.keys.mpk, keys.at(gamma.members.front()), bytes, gamma, partials);
    sigs.push_back({{"message", hex(bytes)}, {"policy", gamma.members}, {"threshold", gamma.t},
                    {"partials", partial_hex}, {"signature", hex(sigma.serialize())}, {"valid", true}});
    signed_msgs.emplace_back(msg, sigma);
  }
  {
    // The first signature presented with the second message.
    const auto wrong = protocol::canonical_encode(second);
    sigs.push_back({{"message", hex(wrong)}, {"policy", golden.pseudonyms}, {"threshold", 2},
                    {"partials", json::array()}, {"signature", sigs[0]["signature"]}, {"valid", false}});
  }

  json frames = json::array();
  auto add_frame = [&](protocol::FrameType t, Bytes payload) {
    frames.push_back({{"type", std::string(protocol::frame_name(t))},
                      {"frame", hex(protocol::Frame{t, std::move(payload)}.encode())}});
  };
  add_frame(protocol::FrameType::Ticket, golden.ticket.encode());
  add_frame(protocol::FrameType::PartialSignature,
            PartialSignature::deserialize(from_hex(sigs[0]["partials"][0].get<std::string>())).serialize());
  add_frame(protocol::FrameType::MsgPrime, protocol::encode_msg_prime(signed_msgs[0].first, signed_msgs[0].second));
  protocol::AccreditationResult verdict{protocol::Verdict::Granted, 2, 2000, "ok", golden.ticket.ticket_id};
  add_frame(protocol::FrameType::Verdict, verdict.encode());
  add_frame(protocol::FrameType::Roster, protocol::GroupRoster{1, golden.pseudonyms}.encode());

  const std::map<std::string, std::string> contents = {
      {"params.json", params.dump(2) + "\n"},     {"keys.json", keys_json.dump(2) + "\n"},
      {"signatures.json", sigs.dump(2) + "\n"},   {"messages.json", messages.dump(2) + "\n"},
      {"frames.json", frames.dump(2) + "\n"},
  };
  std::vector<fs::path> written;
  std::string manifest;
  for (const auto& [name, text] : contents) {
    write_file(out_dir / name, text);
    manifest += to_hex(sha256(as_bytes(text))) + "  " + name + "\n";
    written.push_back(out_dir / name);
  }
  write_file(out_dir / "MANIFEST", manifest);
  written.push_back(out_dir / "MANIFEST");
  return written;
}

VectorCheckReport check_vectors(const fs::path& dir) {
  VectorCheckReport report;
  auto check = [&](bool ok, const std::string& what) {
    ++report.checks;
    if (!ok) report.failures.push_back(what);
  };
  auto guarded = [&](const std::string& what, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      check(false, what + ": " + e.what());
    }
  };

  std::map<std::string, std::string> listed;
  guarded("MANIFEST", [&] {
    const auto text = read_file(dir / "MANIFEST");
    std::istringstream in(std::string(text.begin(), text.end()));
    std::string digest, name;
    while (in >> digest >> name) listed[name] = digest;
  });
  for (const char* name : kFiles) {
    guarded(name, [&] {
      auto it = listed.find(name);
      check(it != listed.end(), std::string(name) + " listed in MANIFEST");
      if (it != listed.end()) check(to_hex(sha256(read_file(dir / name))) == it->second, std::string(name) + " digest");
    });
  }

  auto load = [&](const char* name) {
    const auto bytes = read_file(dir / name);
    return json::parse(bytes.begin(), bytes.end());
  };

  PublicParams pms;
  MasterPublicKey mpk;
  bool have_params = false;
  guarded("params.json", [&] {
    const auto p = load("params.json");
    pms = PublicParams::deserialize(from_hex(p.at("pms").get<std::string>()));
    mpk = MasterPublicKey::deserialize(from_hex(p.at("mpk").get<std::string>()));
    check(pms.n_max == p.at("n_max").get<std::size_t>(), "params n_max");
    have_params = true;
  });
  if (!have_params) return report;

  guarded("keys.json", [&] {
    for (const auto& k : load("keys.json")) {
      const auto id = k.at("identity").get<std::string>();
      const auto sk = IdentitySecretKey::deserialize(from_hex(k.at("key").get<std::string>()));
      check(sk.identity == id && key_is_consistent(pms, mpk, sk), "key for " + id);
    }
  });

  guarded("signatures.json", [&] {
    std::size_t i = 0;
    for (const auto& s : load("signatures.json")) {
      const auto msg = from_hex(s.at("message").get<std::string>());
      const ThresholdPolicy gamma{s.at("threshold").get<std::size_t>(), s.at("policy").get<std::vector<std::string>>()};
      const auto sigma = from_hex(s.at("signature").get<std::string>());
      const bool expected = s.at("valid").get<bool>();
      check(verify(pms, mpk, msg, sigma, gamma).valid == expected, "signature " + std::to_string(i));
      for (const auto& p : s.at("partials")) {
        const auto bytes = from_hex(p.get<std::string>());
        check(PartialSignature::deserialize(bytes).serialize() == bytes, "partial of signature " + std::to_string(i));
      }
      ++i;
    }
  });

  guarded("messages.json", [&] {
    std::size_t i = 0;
    for (const auto& m : load("messages.json")) {
      const auto msg = message_from(m);
      const auto encoding = from_hex(m.at("encoding").get<std::string>());
      check(protocol::canonical_encode(msg) == encoding, "message " + std::to_string(i) + " encoding");
      check(protocol::canonical_decode(encoding) == msg, "message " + std::to_string(i) + " decoding");
      ++i;
    }
  });

  guarded("frames.json", [&] {
    for (const auto& f : load("frames.json")) {
      const auto name = f.at("type").get<std::string>();
      const auto bytes = from_hex(f.at("frame").get<std::string>());
      const auto frame = protocol::Frame::decode(bytes);
      check(protocol::frame_name(frame.type) == name && frame.encode() == bytes, "frame " + name);
      switch (frame.type) {
        case protocol::FrameType::Ticket: protocol::Ticket::decode(frame.payload); break;
        case protocol::FrameType::PartialSignature: PartialSignature::deserialize(frame.payload); break;
        case protocol::FrameType::MsgPrime: {
          auto [msg, sigma] = protocol::decode_msg_prime(frame.payload);
          check(verify(pms, mpk, protocol::canonical_encode(msg), sigma, msg.policy()).valid, "frame msg-prime verifies");
          break;
        }
        case protocol::FrameType::Verdict: protocol::AccreditationResult::decode(frame.payload); break;
        case protocol::FrameType::Roster: protocol::GroupRoster::decode(frame.payload); break;
        default: break;
      }
    }
  });
  return report;
}

}  // namespace gsa::harness
