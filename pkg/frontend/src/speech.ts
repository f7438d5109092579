// Optional browser speech capture. Transcription happens entirely in
// the browser; recognized text feeds the same path as typed commands.

type OnText = (text: string) => void;

export function speechAvailable(): boolean {
  const w = window as any;
  return Boolean(w.SpeechRecognition || w.webkitSpeechRecognition);
}

export function startSpeechCapture(onText: OnText): (() => void) | null {
  const w = window as any;
  const Recognition = w.SpeechRecognition || w.webkitSpeechRecognition;
  if (!Recognition) return null;
  const rec = new Recognition();
  rec.continuous = true;
  rec.interimResults = false;
  rec.lang = "en-US";
  rec.onresult = (event: any) => {
    for (let i = event.resultIndex; i < event.results.length; i++) {
      const result = event.results[i];
      if (result.isFinal && result[0]?.transcript) {
        onText(String(result[0].transcript).trim());
      }
    }
  };
  rec.start();
  return () => rec.stop();
}
