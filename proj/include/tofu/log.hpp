/*
 * Copyright 2026 The ToFu Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
// stderr logging; TOFU_LOG=error|info|debug picks the level (default error).

#ifndef TOFU_LOG_HPP_
#define TOFU_LOG_HPP_

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace tofu {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("TOFU_LOG");
    const std::string_view v = env ? env : "";
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    return LogLevel::Error;
  }();
  return level;
}

inline void log(LogLevel level, const std::string& msg) {
  if (level > log_level()) return;
  static constexpr const char* kNames[] = {"error", "info", "debug"};
  std::cerr << "[tofu " << kNames[static_cast<int>(level)] << "] " << msg
            << '\n';
}

inline void log_error(const std::string& msg) { log(LogLevel::Error, msg); }
inline void log_info(const std::string& msg) { log(LogLevel::Info, msg); }
inline void log_debug(const std::string& msg) { log(LogLevel::Debug, msg); }

}  // namespace tofu

#endif  // TOFU_LOG_HPP_
