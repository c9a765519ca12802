#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "basecamp/sentinel/select.hpp"

namespace basecamp::sentinel {

/// Line-delimited JSON protocol. Each input line is one command object and
/// gets exactly one response line:
///   {"cmd":"select","data":[...],"labels":[...],"trials":N,"seed":S}
///   {"cmd":"detect","data":[...]}          uses the current model
///   {"cmd":"refit","data":[...]}           sliding refit of the current model
/// A "model" field on detect or refit replaces the current model first.
/// Responses are {"ok":true,...} or {"ok":false,"error":"..."}.
class DetectionService {
 public:
  json handle(const json& cmd) {
    try {
      if (!cmd.is_object() || !cmd.contains("cmd")) throw InputErrorLike("command must be an object with a 'cmd' field");
      std::string op = cmd.at("cmd").get<std::string>();
      std::vector<double> data = cmd.at("data").get<std::vector<double>>();
      if (cmd.contains("model")) model_ = detector_from_json(cmd.at("model"));
      if (op == "select") {
        std::optional<std::vector<std::size_t>> labels;
        if (cmd.contains("labels")) labels = cmd.at("labels").get<std::vector<std::size_t>>();
        Budget b = cmd.contains("seconds") ? Budget::of_seconds(cmd.at("seconds").get<double>())
                                           : Budget::of_trials(cmd.value("trials", 100));
        Selection s = select_model(data, labels, b, cmd.value("seed", std::uint64_t{0}));
        model_ = s.model;
        return {{"ok", true}, {"report", to_json(detect(s, data))}};
      }
      if (!model_) throw InputErrorLike("no model yet; send 'select' or pass a 'model'");
      if (op == "detect") return {{"ok", true}, {"report", to_json(detect(*model_, data))}};
      if (op == "refit") {
        model_ = refit(*model_, data);
        return {{"ok", true}, {"model", to_json(*model_)}};
      }
      throw InputErrorLike("unknown command '" + op + "'");
    } catch (const std::exception& e) {
      return {{"ok", false}, {"error", e.what()}};
    }
  }

  /// Serves until end of input. Returns the number of failed commands.
  int serve(std::istream& in, std::ostream& out) {
    std::string line;
    int failures = 0;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json response;
      try {
        response = handle(json::parse(line));
      } catch (const json::exception& e) {
        response = {{"ok", false}, {"error", std::string("malformed JSON: ") + e.what()}};
      }
      if (!response["ok"].get<bool>()) ++failures;
      out << response.dump() << '\n' << std::flush;
    }
    return failures;
  }

  const std::optional<DetectorModel>& model() const { return model_; }

 private:
  using InputErrorLike = std::invalid_argument;
  std::optional<DetectorModel> model_;
};

}  // namespace basecamp::sentinel
