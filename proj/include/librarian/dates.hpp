/*
 * Copyright 2026 The Librarian Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace librarian {

// Calendar date without time of day.
using Date = std::chrono::sys_days;

// Strict YYYY-MM-DD. Returns nullopt for anything else, including invalid
// calendar dates such as 2021-02-30.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

// b - a in whole days.
inline long long days_between(Date a, Date b) { return (b - a).count(); }

Date today_utc();

}  // namespace librarian
