//! Quiz grading.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::QuizSection;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuizError {
    #[error("expected {expected} answers, got {got}")]
    AnswerCount { expected: usize, got: usize },
    #[error("answer {answer} to question {question} is outside its {choices} choices")]
    ChoiceOutOfRange { question: usize, answer: usize, choices: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub correct: bool,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizGrade {
    pub score: u64,
    pub per_question: Vec<QuestionResult>,
}

/// Sums the points of correctly answered questions. Every question's
/// explanation is returned regardless of the answer.
pub fn grade_quiz(quiz: &QuizSection, answers: &[usize]) -> Result<QuizGrade, QuizError> {
    if answers.len() != quiz.questions.len() {
        return Err(QuizError::AnswerCount { expected: quiz.questions.len(), got: answers.len() });
    }
    let mut score = 0;
    let mut per_question = Vec::with_capacity(answers.len());
    for (i, (question, &answer)) in quiz.questions.iter().zip(answers).enumerate() {
        if answer >= question.choices.len() {
            return Err(QuizError::ChoiceOutOfRange { question: i, answer, choices: question.choices.len() });
        }
        let correct = answer == question.correct_index;
        if correct {
            score += u64::from(question.points);
        }
        per_question.push(QuestionResult { correct, explanation: question.explanation.clone() });
    }
    Ok(QuizGrade { score, per_question })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Question, SectionId};
    use proptest::prelude::*;

    fn question(points: u32, correct_index: usize, choices: usize) -> Question {
        Question {
            prompt: "q".into(),
            choices: (0..choices).map(|c| c.to_string()).collect(),
            correct_index,
            explanation: format!("worth {points}"),
            points,
        }
    }

    fn quiz(questions: Vec<Question>) -> QuizSection {
        QuizSection { section_id: SectionId::new("quiz"), questions }
    }

    #[test]
    fn all_correct_sums_points() {
        let q = quiz(vec![question(2, 0, 3), question(3, 2, 3)]);
        let grade = grade_quiz(&q, &[0, 2]).unwrap();
        assert_eq!(grade.score, 5);
        assert!(grade.per_question.iter().all(|r| r.correct));
    }

    #[test]
    fn all_wrong_scores_zero_with_explanations() {
        let q = quiz(vec![question(2, 0, 3), question(3, 2, 3)]);
        let grade = grade_quiz(&q, &[1, 1]).unwrap();
        assert_eq!(grade.score, 0);
        assert_eq!(grade.per_question[1].explanation, "worth 3");
    }

    #[test]
    fn shape_errors() {
        let q = quiz(vec![question(2, 0, 3)]);
        assert_eq!(grade_quiz(&q, &[]), Err(QuizError::AnswerCount { expected: 1, got: 0 }));
        assert_eq!(grade_quiz(&q, &[3]), Err(QuizError::ChoiceOutOfRange { question: 0, answer: 3, choices: 3 }));
    }

    proptest! {
        #[test]
        fn mixed_answers_match_recount(spec in prop::collection::vec((0u32..10, 1usize..5, any::<prop::sample::Index>(), any::<prop::sample::Index>()), 5)) {
            let questions: Vec<Question> = spec.iter().map(|(p, n, c, _)| question(*p, c.index(*n), *n)).collect();
            let answers: Vec<usize> = spec.iter().map(|(_, n, _, a)| a.index(*n)).collect();
            let mut expected = 0u64;
            for i in 0..questions.len() {
                if answers[i] == questions[i].correct_index {
                    expected += questions[i].points as u64;
                }
            }
            let grade = grade_quiz(&quiz(questions), &answers).unwrap();
            prop_assert_eq!(grade.score, expected);
        }
    }
}
