/** Keyboard shortcut mapping, pure so tests need no DOM events. */

export type KeyAction =
  | { type: 'approve' }
  | { type: 'reject' }
  | { type: 'next' }
  | { type: 'prev' }
  | null;

export function actionForKey(key: string, typingInField: boolean): KeyAction {
  if (typingInField) return null;
  switch (key) {
    case 'a':
      return { type: 'approve' };
    case 'r':
      return { type: 'reject' };
    case 'j':
      return { type: 'next' };
    case 'k':
      return { type: 'prev' };
    default:
      return null;
  }
}
