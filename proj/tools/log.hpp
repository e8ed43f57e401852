#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <iostream>
#include <string>

namespace scenectx::cli {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// One JSON object per line on stderr.
class Log {
 public:
  void configure(std::string command, int verbosity) {
    command_ = std::move(command);
    verbosity_ = verbosity;
  }

  void write(Level level, const std::string& event, nlohmann::json fields = nlohmann::json::object()) const {
    if (static_cast<int>(level) > verbosity_) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    nlohmann::json line{{"t", elapsed()}, {"level", names[static_cast<int>(level)]}, {"cmd", command_}, {"event", event}};
    if (fields.is_object()) line.update(fields);
    std::cerr << line.dump() << '\n';
  }

  void info(const std::string& event, nlohmann::json fields = nlohmann::json::object()) const {
    write(Level::Info, event, std::move(fields));
  }
  void warn(const std::string& event, nlohmann::json fields = nlohmann::json::object()) const {
    write(Level::Warn, event, std::move(fields));
  }
  void error(const std::string& event, nlohmann::json fields = nlohmann::json::object()) const {
    write(Level::Error, event, std::move(fields));
  }

 private:
  double elapsed() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

  std::string command_ = "scenectx";
  int verbosity_ = static_cast<int>(Level::Info);
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace scenectx::cli
