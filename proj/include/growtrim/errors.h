/* Copyright 2026 The growtrim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GROWTRIM_ERRORS_H_
#define GROWTRIM_ERRORS_H_

#include <stdexcept>
#include <string>

namespace growtrim {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GROWTRIM_DEFINE_ERROR(Name)     \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

GROWTRIM_DEFINE_ERROR(InvalidArgument);
GROWTRIM_DEFINE_ERROR(InvalidContext);
GROWTRIM_DEFINE_ERROR(MalformedVector);
GROWTRIM_DEFINE_ERROR(ShapeMismatch);
GROWTRIM_DEFINE_ERROR(InvalidArchitecture);
GROWTRIM_DEFINE_ERROR(FormatError);
GROWTRIM_DEFINE_ERROR(CycleDetected);
GROWTRIM_DEFINE_ERROR(DegenerateBase);
GROWTRIM_DEFINE_ERROR(VocabularyOverflow);
GROWTRIM_DEFINE_ERROR(NonFiniteLoss);
GROWTRIM_DEFINE_ERROR(KTooLarge);
GROWTRIM_DEFINE_ERROR(NoCandidates);
GROWTRIM_DEFINE_ERROR(EvaluatorFailure);
GROWTRIM_DEFINE_ERROR(TrainerUnreachable);
GROWTRIM_DEFINE_ERROR(CorruptCheckpoint);

#undef GROWTRIM_DEFINE_ERROR

}  // namespace growtrim

#endif  // GROWTRIM_ERRORS_H_
